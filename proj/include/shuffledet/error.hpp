// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shuffledet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid operator configuration (divisibility, empty output, bad window).
class ParamError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// Malformed input bytes: weight files, images, annotation text.
class FormatError : public Error {
public:
    using Error::Error;
};

// A tensor name the model needs is absent from the weight store.
class StoreError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class AnalysisError : public Error {
public:
    using Error::Error;
};

} // namespace shuffledet
