#pragma once

#include <stdexcept>
#include <string>

namespace cyberprem {

// Numeric and domain failures. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class Singularity : public Error {
public:
    using Error::Error;
};

class Supercritical : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class SizeCapExceeded : public Error {
public:
    using Error::Error;
};

class InstanceTooLarge : public Error {
public:
    using Error::Error;
};

class IncompleteMoments : public Error {
public:
    using Error::Error;
};

// Malformed or schema-violating configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cyberprem
