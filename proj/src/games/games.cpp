#include "selftest/games.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"

namespace selftest::games {

std::string to_string(GameKind kind) {
    switch (kind) {
        case GameKind::Chsh: return "chsh";
        case GameKind::Tilted: return "tilted";
        case GameKind::MagicSquare: return "magic_square";
    }
    return "?";
}

GameKind game_kind_from_string(const std::string& name) {
    if (name == "chsh") return GameKind::Chsh;
    if (name == "tilted") return GameKind::Tilted;
    if (name == "magic_square") return GameKind::MagicSquare;
    throw config_error("unknown game kind: " + name);
}

TiltParams tilt_params(double theta) {
    if (!(theta > 0.0) || theta > std::numbers::pi / 4 + 1e-15)
        throw std::invalid_argument("tilt_params: theta must lie in (0, pi/4]");
    const double s = std::sin(2.0 * theta);
    TiltParams p;
    p.theta = theta;
    p.alpha = 2.0 * std::sqrt(std::max(0.0, (1.0 - s * s) / (1.0 + s * s)));
    p.mu = std::atan(s);
    return p;
}

double tilted_optimum(double alpha) { return std::sqrt(8.0 + 2.0 * alpha * alpha); }

namespace {
int ipow(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}
} // namespace

GameSpec GameSpec::chsh(int copies) {
    GameSpec g;
    g.kind = GameKind::Chsh;
    g.copies = copies;
    g.validate();
    return g;
}

GameSpec GameSpec::tilted(std::vector<double> thetas) {
    GameSpec g;
    g.kind = GameKind::Tilted;
    g.copies = int(thetas.size());
    g.thetas = std::move(thetas);
    g.validate();
    return g;
}

GameSpec GameSpec::magic_square(int copies) {
    GameSpec g;
    g.kind = GameKind::MagicSquare;
    g.copies = copies;
    g.validate();
    return g;
}

int GameSpec::questions_per_party() const { return ipow(radix(), copies); }

int GameSpec::answers_per_party() const {
    return kind == GameKind::MagicSquare ? ipow(4, copies) : ipow(2, copies);
}

void GameSpec::validate() const {
    if (copies < 1) throw config_error("game: copies must be >= 1");
    const int cap = kind == GameKind::MagicSquare ? kMaxCopiesMagicSquare : kMaxCopiesChsh;
    if (copies > cap)
        throw config_error("game: " + to_string(kind) + " supports at most " +
                           std::to_string(cap) + " parallel copies at desk scale");
    if (kind == GameKind::Tilted) {
        if (int(thetas.size()) != copies)
            throw config_error("game: tilted needs one theta per copy");
        for (double th : thetas)
            if (!(th > 0.0) || th > std::numbers::pi / 4 + 1e-15)
                throw config_error("game: each theta must lie in (0, pi/4]");
    } else if (!thetas.empty()) {
        throw config_error("game: thetas only apply to the tilted game");
    }
}

std::string GameSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["copies"] = copies;
    j["thetas"] = thetas;
    return j.dump();
}

GameSpec GameSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw config_error("game: invalid JSON");
    GameSpec g;
    try {
        g.kind = game_kind_from_string(j.at("kind").get<std::string>());
        g.copies = j.at("copies").get<int>();
        if (j.contains("thetas")) g.thetas = j["thetas"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("game: ") + e.what());
    }
    g.validate();
    return g;
}

int encode_question(const std::vector<int>& digits, int radix) {
    int index = 0;
    for (int d : digits) {
        if (d < 0 || d >= radix) throw std::invalid_argument("encode_question: digit out of range");
        index = index * radix + d;
    }
    return index;
}

std::vector<int> decode_question(int index, int n, int radix) {
    if (index < 0 || index >= ipow(radix, n))
        throw std::invalid_argument("decode_question: index out of range");
    auto digits = std::vector<int>(std::size_t(n));
    for (int i = n - 1; i >= 0; --i) {
        digits[std::size_t(i)] = index % radix;
        index /= radix;
    }
    return digits;
}

CorrelationTable::CorrelationTable(GameSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    na_ = nb_ = spec_.answers_per_party();
    nx_ = ny_ = spec_.questions_per_party();
    p_.assign(std::size_t(na_) * std::size_t(nb_) * std::size_t(nx_) * std::size_t(ny_), 0.0);
}

void CorrelationTable::validate() const {
    for (double v : p_)
        if (v < -1e-12) throw numerical_degeneracy("correlation table: negative probability");
    for (int x = 0; x < nx_; ++x)
        for (int y = 0; y < ny_; ++y) {
            double sum = 0.0;
            for (int a = 0; a < na_; ++a)
                for (int b = 0; b < nb_; ++b) sum += at(a, b, x, y);
            if (std::abs(sum - 1.0) > 1e-10)
                throw numerical_degeneracy("correlation table: normalization violated");
        }
    // Alice's marginal must not depend on y, and symmetrically.
    for (int x = 0; x < nx_; ++x)
        for (int a = 0; a < na_; ++a) {
            double ref = 0.0;
            for (int b = 0; b < nb_; ++b) ref += at(a, b, x, 0);
            for (int y = 1; y < ny_; ++y) {
                double m = 0.0;
                for (int b = 0; b < nb_; ++b) m += at(a, b, x, y);
                if (std::abs(m - ref) > 1e-9)
                    throw numerical_degeneracy("correlation table: signalling Alice marginal");
            }
        }
    for (int y = 0; y < ny_; ++y)
        for (int b = 0; b < nb_; ++b) {
            double ref = 0.0;
            for (int a = 0; a < na_; ++a) ref += at(a, b, 0, y);
            for (int x = 1; x < nx_; ++x) {
                double m = 0.0;
                for (int a = 0; a < na_; ++a) m += at(a, b, x, y);
                if (std::abs(m - ref) > 1e-9)
                    throw numerical_degeneracy("correlation table: signalling Bob marginal");
            }
        }
}

namespace {

// digit of `index` at copy position `copy` (0-based, most significant first)
int digit_at(int index, int copy, int n, int radix) {
    for (int i = n - 1; i > copy; --i) index /= radix;
    return index % radix;
}

void require_chsh_shape(const CorrelationTable& t) {
    if (t.spec().kind == GameKind::MagicSquare)
        throw std::invalid_argument("expected a CHSH-shaped table");
}

void require_copy(const CorrelationTable& t, int copy) {
    if (copy < 0 || copy >= t.spec().copies)
        throw std::invalid_argument("copy index out of range");
}

// Joint correlators E[(-1)^{a_i + b_i} | x_i, y_i] and Alice's marginal
// E[(-1)^{a_i} | x_i], other copies uniformly averaged on both sides.
struct CopyCorrelators {
    double e[2][2] = {{0, 0}, {0, 0}};
    double ea[2] = {0, 0};
};

CopyCorrelators chsh_correlators(const CorrelationTable& t, int copy) {
    require_chsh_shape(t);
    require_copy(t, copy);
    const int n = t.spec().copies;
    const int nq = t.spec().questions_per_party();
    const int na = t.spec().answers_per_party();

    CopyCorrelators c;
    for (int x = 0; x < nq; ++x) {
        const int xi = digit_at(x, copy, n, 2);
        for (int y = 0; y < nq; ++y) {
            const int yi = digit_at(y, copy, n, 2);
            for (int a = 0; a < na; ++a) {
                const int ai = digit_at(a, copy, n, 2);
                for (int b = 0; b < na; ++b) {
                    const int bi = digit_at(b, copy, n, 2);
                    const double p = t.at(a, b, x, y);
                    c.e[xi][yi] += ((ai + bi) % 2 == 0 ? p : -p);
                    c.ea[xi] += (ai == 0 ? p : -p);
                }
            }
        }
    }
    const double half = std::ldexp(1.0, -(n - 1));  // 1 / 2^{n-1}
    for (int xi = 0; xi < 2; ++xi) {
        for (int yi = 0; yi < 2; ++yi) c.e[xi][yi] *= half * half;
        // marginal also averages over all of Bob's questions
        c.ea[xi] *= half / double(nq);
    }
    return c;
}

} // namespace

double chsh_value(const CorrelationTable& t, int copy) {
    CopyCorrelators c = chsh_correlators(t, copy);
    return c.e[0][0] + c.e[0][1] + c.e[1][0] - c.e[1][1];
}

double tilted_value(const CorrelationTable& t, int copy, const TiltParams& params) {
    CopyCorrelators c = chsh_correlators(t, copy);
    return params.alpha * c.ea[0] + c.e[0][0] + c.e[0][1] + c.e[1][0] - c.e[1][1];
}

namespace {

struct MagicCondition {
    int qa, qb;        // the copy's question pair (row, column)
    bool a1, a2;       // which of Alice's two bits enter the parity
    bool b1, b2;
    double sign;
};

// One condition per cell of the square; the (2,2) completion carries the
// third column's -1.
constexpr MagicCondition kMagicConditions[9] = {
    {0, 0, true, false, true, false, +1.0},   // cell (0,0)
    {0, 1, false, true, true, false, +1.0},   // cell (0,1)
    {1, 1, false, true, false, true, +1.0},   // cell (1,1)
    {1, 0, true, false, false, true, +1.0},   // cell (1,0)
    {0, 2, true, true, true, false, +1.0},    // cell (0,2)
    {1, 2, true, true, false, true, +1.0},    // cell (1,2)
    {2, 0, true, false, true, true, +1.0},    // cell (2,0)
    {2, 1, false, true, true, true, +1.0},    // cell (2,1)
    {2, 2, true, true, true, true, -1.0},     // cell (2,2)
};

} // namespace

std::array<double, 9> magic_square_lhs(const CorrelationTable& t, int copy) {
    if (t.spec().kind != GameKind::MagicSquare)
        throw std::invalid_argument("expected a magic-square table");
    require_copy(t, copy);
    const int n = t.spec().copies;
    const int nq = t.spec().questions_per_party();
    const int na = t.spec().answers_per_party();

    std::array<double, 9> lhs{};
    for (int x = 0; x < nq; ++x) {
        const int xi = digit_at(x, copy, n, 3);
        for (int y = 0; y < nq; ++y) {
            const int yi = digit_at(y, copy, n, 3);
            for (int a = 0; a < na; ++a) {
                const int ad = digit_at(a, copy, n, 4);
                const int a1 = ad >> 1, a2 = ad & 1;
                for (int b = 0; b < na; ++b) {
                    const int bd = digit_at(b, copy, n, 4);
                    const int b1 = bd >> 1, b2 = bd & 1;
                    const double p = t.at(a, b, x, y);
                    if (p == 0.0) continue;
                    for (int c = 0; c < 9; ++c) {
                        const MagicCondition& mc = kMagicConditions[c];
                        if (mc.qa != xi || mc.qb != yi) continue;
                        int parity = (mc.a1 ? a1 : 0) + (mc.a2 ? a2 : 0) + (mc.b1 ? b1 : 0) +
                                     (mc.b2 ? b2 : 0);
                        lhs[std::size_t(c)] += mc.sign * (parity % 2 == 0 ? p : -p);
                    }
                }
            }
        }
    }
    const double third = 1.0 / std::pow(3.0, n - 1);
    for (double& v : lhs) v *= third * third;
    return lhs;
}

double win_probability(const CorrelationTable& t, int copy) {
    if (t.spec().kind == GameKind::MagicSquare) {
        std::array<double, 9> lhs = magic_square_lhs(t, copy);
        double p = 0.0;
        for (double v : lhs) p += 0.5 * (1.0 + v);
        return p / 9.0;
    }
    return p_from_s(chsh_value(t, copy));
}

double p_from_s(double s) { return s / 8.0 + 0.5; }
double s_from_p(double p) { return 8.0 * p - 4.0; }

} // namespace selftest::games
