#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace bpve {

/// Base of every error raised by the library. Carries the owning module and a
/// short machine-readable kind so the CLI can emit `{error, module, detail}`.
class Error : public std::runtime_error
{
  public:
    Error(std::string module, std::string kind, std::string const& detail)
        : std::runtime_error(detail), module_(std::move(module)), kind_(std::move(kind))
    {
    }

    std::string const& module() const noexcept { return module_; }
    std::string const& kind() const noexcept { return kind_; }

  private:
    std::string module_;
    std::string kind_;
};

class DomainError : public Error
{
  public:
    DomainError(std::string module, std::string const& detail)
        : Error(std::move(module), "domain_error", detail)
    {
    }
};

/// A series evaluation could not reach the requested accuracy.
class AccuracyError : public Error
{
  public:
    AccuracyError(std::string module, std::string const& detail, double achieved)
        : Error(std::move(module), "accuracy_error", detail), achieved_(achieved)
    {
    }

    double achieved_bound() const noexcept { return achieved_; }

  private:
    double achieved_;
};

class ParseError : public Error
{
  public:
    explicit ParseError(std::string const& detail) : Error("cli", "parse_error", detail) {}
};

class ConfigError : public Error
{
  public:
    ConfigError(std::string module, std::string const& detail)
        : Error(std::move(module), "config_error", detail)
    {
    }
};

class OutOfRange : public Error
{
  public:
    OutOfRange(std::string module, std::string const& detail)
        : Error(std::move(module), "out_of_range", detail)
    {
    }
};

class BudgetExceeded : public Error
{
  public:
    BudgetExceeded(std::string module, std::string const& detail)
        : Error(std::move(module), "budget_exceeded", detail)
    {
    }
};

/// No threshold L could be certified from the survival table.
class NotCertifiable : public Error
{
  public:
    NotCertifiable(std::size_t block, std::string const& detail)
        : Error("construct", "not_certifiable", detail), block_(block)
    {
    }

    std::size_t block() const noexcept { return block_; }

  private:
    std::size_t block_;
};

/// A certified inequality failed. Always an implementation fault.
class ConditionViolation : public Error
{
  public:
    explicit ConditionViolation(std::string const& detail)
        : Error("verify", "violated", detail)
    {
    }
};

} // namespace bpve
