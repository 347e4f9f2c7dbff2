#ifndef CROSSMAP_ERRORS_HPP
#define CROSSMAP_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crossmap {

/// Bad input: malformed arguments, violated preconditions, invalid configs.
/// The CLI maps this family to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A text file that could not be parsed. Carries the 1-based line number.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Training produced a non-finite or exploding loss.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, double loss)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                             " (loss = " + std::to_string(loss) + ")"),
          epoch_(epoch), loss_(loss) {}

    std::size_t epoch() const { return epoch_; }
    double loss() const { return loss_; }

private:
    std::size_t epoch_;
    double loss_;
};

}  // namespace crossmap

#endif
