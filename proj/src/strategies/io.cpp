#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "selftest/strategies.hpp"

static_assert(std::endian::native == std::endian::little,
              "strategy bundles are little-endian; big-endian hosts are unsupported");

namespace selftest::strategies {

using qmath::ComplexMatrix;
using qmath::cplx;

namespace {

void write_complex(std::ofstream& out, const std::vector<cplx>& data) {
    for (const cplx& e : data) {
        const double re = e.real(), im = e.imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof(double));
        out.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
}

std::vector<cplx> read_complex(std::ifstream& in, std::size_t count) {
    std::vector<cplx> data(count);
    for (cplx& e : data) {
        double re = 0.0, im = 0.0;
        in.read(reinterpret_cast<char*>(&re), sizeof(double));
        in.read(reinterpret_cast<char*>(&im), sizeof(double));
        e = cplx(re, im);
    }
    if (!in) throw config_error("strategy import: binary bundle truncated");
    return data;
}

std::string bin_path_for(const std::string& json_path) {
    std::filesystem::path p(json_path);
    p.replace_extension(".bin");
    return p.string();
}

} // namespace

void export_strategy(const Strategy& s, const std::string& json_path) {
    const std::string bin_path = bin_path_for(json_path);

    nlohmann::json j;
    j["schema_version"] = 1;
    j["game"] = nlohmann::json::parse(s.spec.to_json());
    j["dims"] = {s.dim_a(), s.dim_b()};
    j["binary_file"] = std::filesystem::path(bin_path).filename().string();
    // layout: state, then Alice projectors question-major answer-major, then Bob
    {
        std::ofstream out(json_path);
        if (!out) throw config_error("strategy export: cannot write " + json_path);
        out << j.dump(2) << "\n";
    }
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw config_error("strategy export: cannot write " + bin_path);
    write_complex(bin, s.state.amplitudes());
    for (const auto& fam : s.alice)
        for (const ComplexMatrix& p : fam) write_complex(bin, p.entries());
    for (const auto& fam : s.bob)
        for (const ComplexMatrix& p : fam) write_complex(bin, p.entries());
}

Strategy import_strategy(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw config_error("strategy import: cannot open " + json_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw config_error("strategy import: invalid JSON");

    Strategy s;
    std::size_t da = 0, db = 0;
    std::string bin_name;
    try {
        s.spec = games::GameSpec::from_json(j.at("game").dump());
        da = j.at("dims").at(0).get<std::size_t>();
        db = j.at("dims").at(1).get<std::size_t>();
        bin_name = j.at("binary_file").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("strategy import: ") + e.what());
    }

    std::filesystem::path bin_path = std::filesystem::path(json_path).parent_path() / bin_name;
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw config_error("strategy import: cannot open " + bin_path.string());

    s.state = qmath::StateVector(read_complex(bin, da * db), {da, db});
    const int nq = s.spec.questions_per_party();
    const int na = s.spec.answers_per_party();
    auto read_side = [&](std::size_t d) {
        std::vector<std::vector<ComplexMatrix>> fams;
        for (int x = 0; x < nq; ++x) {
            std::vector<ComplexMatrix> fam;
            for (int a = 0; a < na; ++a) fam.emplace_back(d, d, read_complex(bin, d * d));
            fams.push_back(std::move(fam));
        }
        return fams;
    };
    s.alice = read_side(da);
    s.bob = read_side(db);
    s.validate();
    return s;
}

} // namespace selftest::strategies
