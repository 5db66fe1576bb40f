#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace episub {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Search or closure exceeded its budget. `partial_size` carries how far the
/// computation got (closure elements, nodes, ...) when that is meaningful.
struct limit_error : error {
    explicit limit_error(const std::string& what, std::uint64_t partial = 0)
        : error(what), partial_size(partial) {}
    std::uint64_t partial_size;
};

struct ResourceLimits {
    std::uint64_t max_closure_size = 1'000'000;   // free-algebra / subpower closures
    std::uint64_t max_class_size = 100'000;       // subuniverse, congruence, class enumerations
    std::uint64_t max_search_nodes = 100'000'000; // total backtracking nodes
    std::optional<double> time_budget_seconds;    // wall-clock budget for the whole run
};

/// Operation counters carried through a run. Atomic so parallel scans can
/// bump them; totals are order-independent, hence deterministic.
struct Counters {
    std::atomic<std::uint64_t> hom_calls{0};
    std::atomic<std::uint64_t> products_built{0};
    std::atomic<std::uint64_t> subalgebras_scanned{0};
    std::atomic<std::uint64_t> pairs_checked{0};
};

/// Mutable countdown shared by every enumerative operation in one run.
class Budget {
public:
    explicit Budget(ResourceLimits limits = {})
        : limits_(limits), start_(std::chrono::steady_clock::now()) {}

    const ResourceLimits& limits() const { return limits_; }
    Counters& counters() { return counters_; }
    const Counters& counters() const { return counters_; }

    /// One backtracking node (or comparable unit of work). Throws limit_error
    /// when the node or time budget runs out. The clock is polled sparsely.
    void tick(const char* what) {
        std::uint64_t n = nodes_.fetch_add(1, std::memory_order_relaxed) + 1;
        if (n > limits_.max_search_nodes)
            throw limit_error(std::string(what) + ": node budget exceeded", n);
        if (limits_.time_budget_seconds && (n & 0x3ff) == 0) {
            auto elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_)
                               .count();
            if (elapsed > *limits_.time_budget_seconds)
                throw limit_error(std::string(what) + ": time budget exceeded", n);
        }
    }

    void check_size(std::uint64_t size, std::uint64_t cap, const char* what) const {
        if (size > cap)
            throw limit_error(std::string(what) + ": size limit exceeded", size);
    }

    std::uint64_t nodes() const { return nodes_.load(std::memory_order_relaxed); }

private:
    ResourceLimits limits_;
    Counters counters_;
    std::atomic<std::uint64_t> nodes_{0};
    std::chrono::steady_clock::time_point start_;
};

namespace detail {

/// Visits every length-`len` tuple over 0..base-1 in row-major order (first
/// coordinate most significant). `f` may return void or bool; returning false
/// stops the scan.
template <typename F>
void for_each_tuple(int base, int len, F&& f) {
    std::vector<int> t(static_cast<std::size_t>(len), 0);
    if (base <= 0 && len > 0) return;
    while (true) {
        if constexpr (std::is_void_v<decltype(f(t))>) {
            f(t);
        } else {
            if (!f(t)) return;
        }
        int i = len - 1;
        while (i >= 0 && t[static_cast<std::size_t>(i)] == base - 1) {
            t[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) return;
        ++t[static_cast<std::size_t>(i)];
    }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::vector<int>& v, std::uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a64(v.data(), v.size() * sizeof(int), seed);
}

struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const {
        return static_cast<std::size_t>(fnv1a64(v));
    }
};

} // namespace detail

} // namespace episub
