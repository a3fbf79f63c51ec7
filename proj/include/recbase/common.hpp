#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace recbase {

using Index = std::uint32_t;

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input; carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid parameter values or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Resource limits (memory budget) exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Worker count used by parallel kernels. Defaults to hardware concurrency.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(begin, end) over a static partition of [0, n). Every index is
// visited exactly once; results written to per-index slots are therefore
// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Warnings go through spdlog and are counted so that callers (the CLI exit
// code) can tell a clean run from one with recoverable problems.
void warn(std::string_view message);
std::size_t warning_count();
void reset_warning_count();

// Incremental SHA-256; hex_digest() finalizes.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace recbase
