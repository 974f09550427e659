#pragma once

#include <cstddef>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfpc {

/// Base of every error raised by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed delimited input. `row()` is the 1-based record number, header included.
class parse_error : public error {
  public:
    parse_error(std::size_t row, const std::string& what)
        : error("row " + std::to_string(row) + ": " + what), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

class invalid_argument : public error {
  public:
    using error::error;
};

/// A k-nearest-neighbour radius of zero: the neighbourhood has no volume.
class divide_by_zero_error : public error {
  public:
    explicit divide_by_zero_error(std::size_t row)
        : error("divide-by-0: row " + std::to_string(row) +
                " has a zero-volume neighbourhood (duplicate rows); apply jitter first"),
          row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

/// The moment equations do not pin down every unknown.
class rank_deficient_error : public error {
  public:
    rank_deficient_error(std::size_t rank, std::size_t unknowns)
        : error("underdetermined moment system: rank " + std::to_string(rank) + " < " +
                std::to_string(unknowns) + " unknowns (deficiency " +
                std::to_string(unknowns - rank) + ")"),
          rank_(rank), unknowns_(unknowns) {}
    [[nodiscard]] std::size_t rank() const noexcept { return rank_; }
    [[nodiscard]] std::size_t unknowns() const noexcept { return unknowns_; }
    [[nodiscard]] std::size_t deficiency() const noexcept { return unknowns_ - rank_; }

  private:
    std::size_t rank_;
    std::size_t unknowns_;
};

using warning_handler = std::function<void(const std::string&)>;

namespace detail {

struct warning_state {
    std::mutex mutex;
    warning_handler handler = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
};

inline warning_state& warnings() {
    static warning_state state;
    return state;
}

} // namespace detail

/// Installs `handler` for non-fatal diagnostics and returns the previous one.
inline warning_handler set_warning_handler(warning_handler handler) {
    auto& s = detail::warnings();
    std::lock_guard lock(s.mutex);
    return std::exchange(s.handler, std::move(handler));
}

inline void warn(const std::string& msg) {
    auto& s = detail::warnings();
    std::lock_guard lock(s.mutex);
    if (s.handler) s.handler(msg);
}

/// RAII capture of warnings, used by tests and the HTTP layer.
class scoped_warning_capture {
  public:
    scoped_warning_capture()
        : previous_(set_warning_handler([this](const std::string& m) { messages_.push_back(m); })) {}
    ~scoped_warning_capture() { set_warning_handler(std::move(previous_)); }
    scoped_warning_capture(const scoped_warning_capture&) = delete;
    scoped_warning_capture& operator=(const scoped_warning_capture&) = delete;

    [[nodiscard]] const std::vector<std::string>& messages() const noexcept { return messages_; }

  private:
    std::vector<std::string> messages_;
    warning_handler previous_;
};

} // namespace tfpc
