#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfa {

// Finite word over the alphabet {1,...,m}.  Symbols are 1-based.
class Word {
public:
    Word() = default;

    explicit Word(std::vector<int> symbols) : symbols_(std::move(symbols)) {
        for (int s : symbols_) {
            if (s < 1) throw std::invalid_argument("Word: symbols must be >= 1");
        }
    }

    static Word constant(int symbol, std::size_t n) {
        return Word(std::vector<int>(n, symbol));
    }

    // Decode the 0-based base-m rank of a length-n word (lexicographic order).
    static Word from_rank(std::uint64_t rank, std::size_t n, int m) {
        std::vector<int> s(n);
        for (std::size_t i = n; i-- > 0;) {
            s[i] = static_cast<int>(rank % m) + 1;
            rank /= m;
        }
        return Word(std::move(s));
    }

    std::size_t size() const { return symbols_.size(); }
    bool empty() const { return symbols_.empty(); }
    int operator[](std::size_t i) const { return symbols_[i]; }
    const std::vector<int>& symbols() const { return symbols_; }

    void push_back(int sym) {
        if (sym < 1) throw std::invalid_argument("Word: symbols must be >= 1");
        symbols_.push_back(sym);
    }

    Word prefix(std::size_t n) const {
        if (n > symbols_.size()) n = symbols_.size();
        return Word(std::vector<int>(symbols_.begin(), symbols_.begin() + n));
    }

    Word suffix(std::size_t from) const {
        if (from > symbols_.size()) from = symbols_.size();
        return Word(std::vector<int>(symbols_.begin() + from, symbols_.end()));
    }

    // Cyclic left rotation by `shift` places.
    Word rotated(std::size_t shift) const {
        if (symbols_.empty()) return *this;
        shift %= symbols_.size();
        std::vector<int> s;
        s.reserve(symbols_.size());
        s.insert(s.end(), symbols_.begin() + shift, symbols_.end());
        s.insert(s.end(), symbols_.begin(), symbols_.begin() + shift);
        return Word(std::move(s));
    }

    Word operator+(const Word& other) const {
        std::vector<int> s = symbols_;
        s.insert(s.end(), other.symbols_.begin(), other.symbols_.end());
        return Word(std::move(s));
    }

    bool is_constant() const {
        for (std::size_t i = 1; i < symbols_.size(); ++i)
            if (symbols_[i] != symbols_[0]) return false;
        return !symbols_.empty();
    }

    std::uint64_t rank(int m) const {
        std::uint64_t r = 0;
        for (int s : symbols_) {
            if (s > m) throw std::invalid_argument("Word::rank: symbol exceeds alphabet");
            r = r * m + static_cast<std::uint64_t>(s - 1);
        }
        return r;
    }

    std::string str() const {
        std::string out;
        out.reserve(symbols_.size());
        for (int s : symbols_) {
            if (s <= 9) {
                out.push_back(static_cast<char>('0' + s));
            } else {
                out.push_back('(');
                out += std::to_string(s);
                out.push_back(')');
            }
        }
        return out;
    }

    bool operator==(const Word&) const = default;

private:
    std::vector<int> symbols_;
};

inline constexpr std::uint64_t kDefaultCylinderBudget = std::uint64_t{1} << 24;

// m^n with overflow/budget guard.
inline std::uint64_t cylinder_count(int m, std::size_t n, std::uint64_t budget = kDefaultCylinderBudget) {
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < n; ++i) {
        c *= static_cast<std::uint64_t>(m);
        if (c > budget)
            throw std::runtime_error("cylinder enumeration budget exceeded (cap " +
                                     std::to_string(budget) + ")");
    }
    return c;
}

// Visits every length-n word in lexicographic order.
inline void for_each_cylinder(int m, std::size_t n, const std::function<void(const Word&)>& fn,
                              std::uint64_t budget = kDefaultCylinderBudget) {
    const std::uint64_t count = cylinder_count(m, n, budget);
    std::vector<int> s(n, 1);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        fn(Word(s));
        for (std::size_t i = n; i-- > 0;) {
            if (s[i] < m) { ++s[i]; break; }
            s[i] = 1;
        }
    }
}

inline std::vector<Word> enumerate_cylinders(int m, std::size_t n,
                                             std::uint64_t budget = kDefaultCylinderBudget) {
    std::vector<Word> out;
    out.reserve(cylinder_count(m, n, budget));
    for_each_cylinder(m, n, [&](const Word& w) { out.push_back(w); }, budget);
    return out;
}

}  // namespace mfa
