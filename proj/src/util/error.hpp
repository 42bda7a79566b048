#pragma once

#include <stdexcept>
#include <string>

namespace rn {

enum class ErrorKind { invalid_argument, validation, numerical, io, usage };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), kind_(kind), where_(std::move(where)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& where() const { return where_; }

private:
    ErrorKind kind_;
    std::string where_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& where, const std::string& what) {
    throw Error(kind, where, what);
}

}  // namespace rn
