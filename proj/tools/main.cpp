// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "shuffledet/cli.hpp"

int main(int argc, char** argv)
{
    return shuffledet::run_cli(argc, argv, std::cout, std::cerr);
}
