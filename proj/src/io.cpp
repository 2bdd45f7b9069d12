#include "fsmhd/io.hpp"

#include "fsmhd/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>

namespace fsmhd {

using nlohmann::json;

namespace {

constexpr char checkpoint_magic[8] = {'F', 'S', 'M', 'H', 'D', 'C', 'K', '1'};

template <class T>
void put(std::ofstream& out, const T& x) {
    out.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T take(std::ifstream& in) {
    T x{};
    in.read(reinterpret_cast<char*>(&x), sizeof(T));
    if (!in) fail(ErrorCode::ConfigError, "truncated checkpoint");
    return x;
}

void put_array(std::ofstream& out, const Eigen::ArrayXd& a) {
    out.write(reinterpret_cast<const char*>(a.data()), std::streamsize(a.size() * sizeof(double)));
}

Eigen::ArrayXd take_array(std::ifstream& in, Eigen::Index n) {
    Eigen::ArrayXd a(n);
    in.read(reinterpret_cast<char*>(a.data()), std::streamsize(n * sizeof(double)));
    if (!in) fail(ErrorCode::ConfigError, "truncated checkpoint");
    return a;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers(const std::vector<double>& xs) {
    json a = json::array();
    for (double x : xs) a.push_back(number(x));
    return a;
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string write_checkpoint(const std::string& stem, const MhdState& st, std::uint64_t seed, int step) {
    ensure_parent(stem);
    const std::string bin = stem + ".bin";
    const HalfSpaceGrid& g = st.grid();
    {
        std::ofstream out(bin, std::ios::binary);
        if (!out) fail(ErrorCode::ConfigError, "cannot write " + bin);
        out.write(checkpoint_magic, sizeof checkpoint_magic);
        put<std::int32_t>(out, g.d_h());
        put<std::int32_t>(out, g.Ny());
        put<std::int32_t>(out, g.Nz());
        for (double x : {g.L(), st.t, st.eps, st.sigma, st.g, st.S.A}) put(out, x);
        put_array(out, st.S.h);
        put_array(out, st.S.ht);
        for (const auto& c : st.v) put_array(out, c);
        for (const auto& c : st.b) put_array(out, c);
        put_array(out, st.q);
    }
    json side{{"schema_version", 1},
              {"format", "fsmhd-checkpoint"},
              {"binary", std::filesystem::path(bin).filename().string()},
              {"byte_order", "little"},
              {"seed", seed},
              {"step", step},
              {"t", st.t},
              {"eps", st.eps},
              {"sigma", st.sigma},
              {"g", st.g},
              {"A", st.S.A},
              {"grid", {{"d_h", g.d_h()}, {"Ny", g.Ny()}, {"Nz", g.Nz()}, {"L", g.L()}}},
              {"layout", "index = iz * nh + ih, iz = 0 at z = -L"},
              {"fields",
               {{{"name", "h"}, {"count", g.nh()}},
                {{"name", "ht"}, {"count", g.nh()}},
                {{"name", "v1"}, {"count", g.size()}},
                {{"name", "v2"}, {"count", g.size()}},
                {{"name", "v3"}, {"count", g.size()}},
                {{"name", "b1"}, {"count", g.size()}},
                {{"name", "b2"}, {"count", g.size()}},
                {{"name", "b3"}, {"count", g.size()}},
                {{"name", "q"}, {"count", g.size()}}}}};
    write_json(stem + ".json", side);
    return bin;
}

MhdState read_checkpoint(const std::string& bin_path) {
    std::ifstream in(bin_path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot open checkpoint " + bin_path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, checkpoint_magic, sizeof magic) != 0)
        fail(ErrorCode::ConfigError, bin_path + " is not a checkpoint");
    const int d_h = take<std::int32_t>(in), Ny = take<std::int32_t>(in), Nz = take<std::int32_t>(in);
    const double L = take<double>(in), t = take<double>(in), eps = take<double>(in), sigma = take<double>(in),
                 grav = take<double>(in), A = take<double>(in);
    auto g = std::make_shared<HalfSpaceGrid>(d_h, Ny, Nz, L);
    const Eigen::ArrayXd h = take_array(in, g->nh()), ht = take_array(in, g->nh());
    MhdState st;
    st.S = build_extension(g, h, A, &ht);
    for (auto& c : st.v) c = take_array(in, g->size());
    for (auto& c : st.b) c = take_array(in, g->size());
    st.q = take_array(in, g->size());
    st.t = t;
    st.eps = eps;
    st.sigma = sigma;
    st.g = grav;
    return st;
}

StepLog::StepLog(const std::string& path, std::uint64_t seed) {
    ensure_parent(path);
    out_.open(path);
    if (!out_) fail(ErrorCode::ConfigError, "cannot write " + path);
    out_ << "# seed=" << seed << "\n";
    out_ << "step,t,dt,energy,cfl,taylor_margin,div_v,div_b,elliptic_iterations\n";
}

void StepLog::row(int step, double t, double dt, const StepStats& s) {
    out_ << step << ',' << format_double(t) << ',' << format_double(dt) << ',' << format_double(s.energy) << ','
         << format_double(s.cfl) << ',' << format_double(s.taylor_margin) << ',' << format_double(s.div_v) << ','
         << format_double(s.div_b) << ',' << s.elliptic_iterations << '\n';
}

json to_json(const FitResult& f) {
    return {{"slope", number(f.slope)},
            {"intercept", number(f.intercept)},
            {"residual", number(f.residual)},
            {"used", f.used},
            {"excluded", f.excluded}};
}

json to_json(const RateReport& r) {
    json j;
    j["family"] = r.synthetic ? "synthetic" : to_string(r.family);
    j["reference"] = r.reference;
    j["synthetic"] = r.synthetic;
    j["eps"] = numbers(r.eps);
    j["checkpoint_times"] = numbers(r.checkpoint_times);
    j["members"] = json::array();
    for (const auto& m : r.members)
        j["members"].push_back({{"eps", m.eps}, {"ok", m.ok}, {"abort_reason", m.abort_reason}, {"steps", m.steps}});
    j["norms"] = json::array();
    for (const auto& n : r.norms) {
        json e{{"name", n.name},
               {"errors", numbers(n.errors)},
               {"fit", n.fit ? to_json(*n.fit) : json(nullptr)},
               {"fit_note", n.fit_note},
               {"predicted", number(n.predicted)},
               {"band", n.band}};
        j["norms"].push_back(e);
    }
    j["data_rate"] = number(r.data_rate);
    j["verdict"] = to_string(r.verdict);
    j["verdict_reason"] = r.verdict_reason;
    j["initial_discrepancy"] = number(r.initial_discrepancy);
    j["boundary_strain"] = number(r.boundary_strain);
    return j;
}

json to_json(const ScanTable& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"eps", r.eps},
                        {"inner_plus", number(r.inner_plus)},
                        {"inner_minus", number(r.inner_minus)},
                        {"outer_plus", number(r.outer_plus)},
                        {"outer_minus", number(r.outer_minus)}});
    return {{"delta_z", s.delta_z},
            {"rows", rows},
            {"inner_increasing", s.inner_increasing},
            {"outer_decreasing", s.outer_decreasing}};
}

std::string rate_csv(const RateReport& r, std::uint64_t seed) {
    std::string out = "# seed=" + std::to_string(seed) + "\neps";
    for (const auto& n : r.norms) out += "," + n.name;
    out += "\n";
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
        out += format_double(r.eps[i]);
        for (const auto& n : r.norms) out += "," + format_double(i < n.errors.size() ? n.errors[i] : NAN);
        out += "\n";
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::ConfigError, "cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace fsmhd
