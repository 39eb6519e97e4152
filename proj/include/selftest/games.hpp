#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "selftest/errors.hpp"

namespace selftest::games {

enum class GameKind { Chsh, Tilted, MagicSquare };

std::string to_string(GameKind kind);
GameKind game_kind_from_string(const std::string& name);

// Desk-scale guardrails: correlation tables grow as 16^n (CHSH-type) and
// 144^n (magic square).
inline constexpr int kMaxCopiesChsh = 5;
inline constexpr int kMaxCopiesMagicSquare = 2;

struct TiltParams {
    double theta = 0.0;  // state angle, (0, pi/4]
    double alpha = 0.0;  // functional weight, nonnegative root
    double mu = 0.0;     // measurement angle, tan(mu) = sin(2 theta)
};

// alpha = 2 sqrt((1 - sin^2 2theta) / (1 + sin^2 2theta)), mu = atan(sin 2theta).
TiltParams tilt_params(double theta);

// Quantum optimum of the tilted functional, sqrt(8 + 2 alpha^2); 2 sqrt(2) at alpha = 0.
double tilted_optimum(double alpha);

struct GameSpec {
    GameKind kind = GameKind::Chsh;
    int copies = 1;
    std::vector<double> thetas;  // per copy, Tilted only

    static GameSpec chsh(int copies);
    static GameSpec tilted(std::vector<double> thetas);
    static GameSpec magic_square(int copies);

    int radix() const { return kind == GameKind::MagicSquare ? 3 : 2; }
    int questions_per_party() const;
    int answers_per_party() const;

    std::string to_json() const;
    static GameSpec from_json(const std::string& text);

    void validate() const;
};

// Big-endian positional encoding: index = d_1 r^{n-1} + ... + d_{n-1} r + d_n.
// digits[0] is the first (most significant) copy.
int encode_question(const std::vector<int>& digits, int radix);
std::vector<int> decode_question(int index, int n, int radix);

// p(a, b | x, y) over the full parallel alphabets.
class CorrelationTable {
public:
    CorrelationTable() = default;
    explicit CorrelationTable(GameSpec spec);

    const GameSpec& spec() const { return spec_; }
    int answers() const { return na_; }
    int questions() const { return nx_; }

    double& at(int a, int b, int x, int y) {
        return p_[std::size_t(((a * nb_ + b) * nx_ + x)) * std::size_t(ny_) + std::size_t(y)];
    }
    double at(int a, int b, int x, int y) const {
        return p_[std::size_t(((a * nb_ + b) * nx_ + x)) * std::size_t(ny_) + std::size_t(y)];
    }

    const std::vector<double>& raw() const { return p_; }
    std::vector<double>& raw() { return p_; }

    // Nonnegativity (>= -1e-12), per-question normalization (1e-10),
    // no-signalling of both marginals (1e-9).
    void validate() const;

private:
    GameSpec spec_;
    int na_ = 0, nb_ = 0, nx_ = 0, ny_ = 0;
    std::vector<double> p_;
};

// CHSH functional of copy `i` (0-based), all other question bits uniformly
// averaged on both sides.
double chsh_value(const CorrelationTable& t, int copy);

// Tilted functional alpha <A_0> + <A0B0> + <A0B1> + <A1B0> - <A1B1> of copy i.
double tilted_value(const CorrelationTable& t, int copy, const TiltParams& params);

// The nine per-copy agreement correlators of the magic square, one per cell
// of the 3x3 grid, computed from answer-bit parities at the relevant question
// pair (other copies uniformly averaged). Order: cells (0,0), (0,1), (1,1),
// (1,0), (0,2), (1,2), (2,0), (2,1), (2,2); the last carries the -1 column sign.
std::array<double, 9> magic_square_lhs(const CorrelationTable& t, int copy);

double win_probability(const CorrelationTable& t, int copy);

// CHSH functional <-> winning probability under uniform questions.
double p_from_s(double s);
double s_from_p(double p);

} // namespace selftest::games
