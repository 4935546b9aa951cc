// Command-line front end: validation, flip decomposition, delta averages,
// approximation, lattice experiments, constructions, and exhaustive verifiers.

#include "pgn/approximator.hpp"
#include "pgn/constructions.hpp"
#include "pgn/dimensions.hpp"
#include "pgn/lattice.hpp"
#include "pgn/template.hpp"
#include "pgn/weights.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace pgn;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path);
    out << text;
}

Weights parse_weights(const std::string& csv) {
    std::vector<Rational> vals;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) vals.push_back(Rational::parse(item));
    }
    return Weights::create(std::move(vals));
}

DirectionFiltration filtration_from_json(const Weights& w, const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<int> levels;
    for (const auto& l : j.at("levels")) levels.push_back(l.get<int>());
    std::vector<WeightMultiset> multisets;
    for (const auto& arr : j.at("multisets")) {
        std::vector<Rational> vals;
        for (const auto& s : arr) vals.push_back(Rational::parse(s.get<std::string>()));
        multisets.emplace_back(std::move(vals));
    }
    return DirectionFiltration(w, std::move(levels), std::move(multisets));
}

nlohmann::json filtration_to_json(const DirectionFiltration& f) {
    nlohmann::json j;
    j["levels"] = f.levels();
    j["multisets"] = nlohmann::json::array();
    for (const auto& m : f.multisets()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : m.values()) arr.push_back(v.str());
        j["multisets"].push_back(arr);
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parametric geometry of numbers toolkit"};
    app.require_subcommand(1);

    std::string weights_csv, from_path, to_path, out_path, input_path;
    bool as_json = false, as_csv = false, as_svg = false, dump_system = false;
    std::string c_str = "1", c1cap_str = "0", eps_str = "0", t0_str = "0", t1_str = "1",
                step_str = "1/4", horizon_str = "100";
    long long max_value = 6;
    int bound = 3, threads = 1;
    unsigned seed = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--weights", weights_csv, "comma separated rational weights");
        cmd->add_option("--out", out_path, "output file (stdout when omitted)");
        cmd->add_flag("--json", as_json, "machine readable JSON output");
        cmd->add_flag("--csv", as_csv, "CSV output");
        cmd->add_flag("--svg", as_svg, "emit an SVG of the height tracks");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--threads", threads, "worker threads for lattice enumeration");
    };

    auto* validate_cmd = app.add_subcommand("validate", "validate a template JSON file");
    validate_cmd->add_option("input", input_path)->required();
    add_common(validate_cmd);

    auto* delta_cmd = app.add_subcommand("delta", "delta of a direction filtration");
    delta_cmd->add_option("input", input_path, "filtration JSON")->required();
    add_common(delta_cmd);

    auto* delta0_cmd = app.add_subcommand("delta0", "windowed average of the delta profile");
    delta0_cmd->add_option("input", input_path, "template JSON")->required();
    add_common(delta0_cmd);

    auto* approx_cmd = app.add_subcommand("approximate", "significant/separated approximation");
    approx_cmd->add_option("input", input_path, "template JSON")->required();
    approx_cmd->add_option("--C", c_str, "target constant");
    approx_cmd->add_option("--C1-cap", c1cap_str, "escalation cap (doublings)");
    approx_cmd->add_flag("--dump-system", dump_system, "dump the enticement systems");
    add_common(approx_cmd);

    auto* flips_cmd = app.add_subcommand("flips", "elementary flip decomposition");
    flips_cmd->add_option("--from", from_path, "source filtration JSON")->required();
    flips_cmd->add_option("--to", to_path, "target filtration JSON")->required();
    add_common(flips_cmd);

    auto* hn_cmd = app.add_subcommand("hn-track", "Harder-Narasimhan heights along the flow");
    hn_cmd->add_option("input", input_path, "lattice JSON")->required();
    hn_cmd->add_option("--t0", t0_str);
    hn_cmd->add_option("--t1", t1_str);
    hn_cmd->add_option("--step", step_str);
    hn_cmd->add_option("--bound", bound, "coefficient search bound");
    add_common(hn_cmd);

    auto* blade_cmd = app.add_subcommand("blade-track", "log covolume of a flowed sublattice");
    blade_cmd->add_option("input", input_path, "lattice JSON (the sublattice)")->required();
    blade_cmd->add_option("--t0", t0_str);
    blade_cmd->add_option("--t1", t1_str);
    blade_cmd->add_option("--step", step_str);
    add_common(blade_cmd);

    auto* sig_cmd = app.add_subcommand("signatures", "signature intervals of a subspace");
    sig_cmd->add_option("input", input_path, "subspace basis JSON")->required();
    add_common(sig_cmd);

    auto* extract_cmd = app.add_subcommand("extract", "extract a template from a lattice");
    extract_cmd->add_option("input", input_path, "lattice JSON")->required();
    extract_cmd->add_option("--t0", t0_str);
    extract_cmd->add_option("--t1", t1_str);
    extract_cmd->add_option("--step", step_str);
    extract_cmd->add_option("--bound", bound);
    extract_cmd->add_option("--eps", eps_str);
    add_common(extract_cmd);

    auto* match_cmd = app.add_subcommand("match", "check a lattice against a template");
    match_cmd->add_option("input", input_path, "lattice JSON")->required();
    match_cmd->add_option("--template", from_path, "template JSON")->required();
    match_cmd->add_option("--C", c_str);
    match_cmd->add_option("--eps", eps_str);
    match_cmd->add_option("--step", step_str);
    match_cmd->add_option("--bound", bound);
    add_common(match_cmd);

    auto* construct_cmd = app.add_subcommand("construct", "emit a constructed template");
    std::string kind;
    construct_cmd->add_option("kind", kind, "connecting|bump|divergent")->required();
    construct_cmd->add_option("--t0", t0_str);
    construct_cmd->add_option("--t1", t1_str);
    construct_cmd->add_option("--eps", eps_str);
    construct_cmd->add_option("--horizon", horizon_str);
    add_common(construct_cmd);

    auto* dims_cmd = app.add_subcommand("compare-dims", "dimension profile of a weight vector");
    add_common(dims_cmd);

    auto* verify_cmd = app.add_subcommand("verify", "exhaustive checks");
    std::string what;
    verify_cmd->add_option("what", what, "appendix|pre-h|poset")->required();
    verify_cmd->add_option("--max", max_value, "bound for the appendix sweep");
    add_common(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
    }

    try {
        if (validate_cmd->parsed()) {
            GTemplate f = template_from_json(read_file(input_path));
            auto report = validate(f);
            if (as_svg) {
                write_output(out_path, to_svg(f));
                return report.empty() ? 0 : 1;
            }
            if (as_json) {
                nlohmann::json j;
                j["valid"] = report.empty();
                j["violations"] = nlohmann::json::array();
                for (const auto& v : report) {
                    nlohmann::json jv;
                    jv["code"] = v.code;
                    jv["level"] = v.level;
                    jv["t"] = v.time.str();
                    jv["detail"] = v.detail;
                    j["violations"].push_back(jv);
                }
                write_output(out_path, j.dump(2));
                return report.empty() ? 0 : 1;
            }
            if (report.empty()) {
                write_output(out_path, "valid");
                return 0;
            }
            std::ostringstream os;
            for (const auto& v : report)
                os << v.code << " level=" << v.level << " t=" << v.time.str() << " " << v.detail
                   << "\n";
            write_output(out_path, os.str());
            return 1;
        }
        if (delta_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            auto f = filtration_from_json(w, read_file(input_path));
            write_output(out_path, delta(f).str());
            return 0;
        }
        if (delta0_cmd->parsed()) {
            GTemplate f = template_from_json(read_file(input_path));
            if (as_csv) {
                std::ostringstream os;
                os << "from,to,delta\n";
                for (const auto& piece : delta_profile(f))
                    os << piece.from.str() << "," << piece.to.str() << "," << piece.value.str()
                       << "\n";
                write_output(out_path, os.str());
            } else if (as_json) {
                nlohmann::json j;
                j["delta0"] = delta0(f).str();
                j["window"] = {f.t_begin().str(), f.t_end().str()};
                j["profile"] = nlohmann::json::array();
                for (const auto& piece : delta_profile(f))
                    j["profile"].push_back({piece.from.str(), piece.to.str(), piece.value.str()});
                write_output(out_path, j.dump(2));
            } else {
                write_output(out_path, delta0(f).str());
            }
            return 0;
        }
        if (approx_cmd->parsed()) {
            GTemplate f = template_from_json(read_file(input_path));
            Rational c = Rational::parse(c_str);
            if (dump_system) {
                auto sys = significance_system(f, c, Rational(8) * c);
                write_output(out_path, system_to_json(sys));
                return 0;
            }
            int doublings = 12;
            if (c1cap_str != "0") {
                Rational cap = Rational::parse(c1cap_str);
                doublings = 0;
                Rational esc = Rational(8) * c;
                while (esc < cap) { esc += esc; ++doublings; }
            }
            auto res = make_significant_separated(f, c, doublings);
            if (as_svg) {
                write_output(out_path, to_svg(res.result));
                return 0;
            }
            nlohmann::json j;
            j["closeness"] = res.closeness.str();
            j["achieved_shift_bound"] = res.achieved_shift_bound.str();
            j["c1_used"] = res.c1_used.str();
            j["template"] = nlohmann::json::parse(to_json(res.result));
            write_output(out_path, j.dump(2));
            return 0;
        }
        if (flips_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            auto f = filtration_from_json(w, read_file(from_path));
            auto g = filtration_from_json(w, read_file(to_path));
            auto flips = flip_decompose(f, g);
            nlohmann::json j;
            j["count"] = flips.size();
            j["flips"] = nlohmann::json::array();
            j["intermediates"] = nlohmann::json::array();
            DirectionFiltration cur = f;
            for (const auto& flip : flips) {
                nlohmann::json jf;
                jf["eta_from"] = flip.eta_from.str();
                jf["eta_to"] = flip.eta_to.str();
                jf["a"] = flip.a;
                jf["b"] = flip.b;
                j["flips"].push_back(jf);
                cur = flip_apply(cur, flip);
                j["intermediates"].push_back(filtration_to_json(cur));
            }
            if (as_json) {
                write_output(out_path, j.dump(2));
            } else {
                std::ostringstream os;
                os << flips.size() << " flips\n";
                for (const auto& flip : flips)
                    os << "(" << flip.eta_from.str() << " -> " << flip.eta_to.str()
                       << ", a=" << flip.a << ", b=" << flip.b << ")\n";
                write_output(out_path, os.str());
            }
            return 0;
        }
        if (hn_cmd->parsed() || blade_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            Lattice lat = lattice_from_json(read_file(input_path));
            double t0 = Rational::parse(t0_str).to_double();
            double t1 = Rational::parse(t1_str).to_double();
            double step = Rational::parse(step_str).to_double();
            std::vector<double> grid;
            for (double t = t0; t <= t1 + 1e-12; t += step) grid.push_back(t);
            std::ostringstream os;
            if (hn_cmd->parsed()) {
                auto rows = hn_track(lat, w, grid, bound, threads);
                os << "t";
                for (int l = 0; l <= lat.rank(); ++l) os << ",HN" << l;
                os << ",stable\n";
                for (const auto& row : rows) {
                    os << row.t;
                    for (double h : row.heights) os << "," << h;
                    os << "," << (row.filtration.stable ? 1 : 0) << "\n";
                }
            } else {
                auto track = blade_track(lat, w, grid);
                os << "t,logcov\n";
                for (const auto& row : track.rows) os << row.t << "," << row.log_norm << "\n";
                os << "# segments\n";
                for (const auto& seg : track.segments) {
                    os << "# [" << seg.from << ", " << seg.to << "] slope " << seg.fitted_slope
                       << " label ";
                    for (const auto& v : seg.label.values()) os << v.str() << " ";
                    os << "\n";
                }
            }
            write_output(out_path, os.str());
            return 0;
        }
        if (sig_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            Lattice sub = lattice_from_json(read_file(input_path));
            auto profile = signature_intervals(sub.basis, w);
            std::ostringstream os;
            for (const auto& iv : profile.intervals) {
                os << "[" << iv.from << ", " << iv.to << "] E = {";
                for (const auto& v : iv.label.values()) os << v.str() << " ";
                os << "}\n";
            }
            os << (profile.monotone ? "monotone" : "NOT monotone") << "\n";
            write_output(out_path, os.str());
            return 0;
        }
        if (extract_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            Lattice lat = lattice_from_json(read_file(input_path));
            ExtractParams params;
            params.bound = bound;
            params.grid_step = Rational::parse(step_str).to_double();
            if (eps_str != "0") params.eps = Rational::parse(eps_str).to_double();
            GTemplate f = extract_template(lat, w, Rational::parse(t0_str).to_double(),
                                           Rational::parse(t1_str).to_double(), params);
            write_output(out_path, as_svg ? to_svg(f) : to_json(f));
            return 0;
        }
        if (match_cmd->parsed()) {
            Lattice lat = lattice_from_json(read_file(input_path));
            GTemplate f = template_from_json(read_file(from_path));
            double eps = eps_str == "0" ? 0.3 : Rational::parse(eps_str).to_double();
            auto report = matches(lat, f, eps, Rational::parse(c_str).to_double(),
                                  Rational::parse(step_str).to_double(), bound);
            nlohmann::json j;
            j["matched"] = report.matched;
            j["worst_height_gap"] = report.worst_height_gap;
            j["worst_direction_distance"] = report.worst_direction_distance;
            j["notes"] = report.notes;
            write_output(out_path, j.dump(2));
            return report.matched ? 0 : 1;
        }
        if (construct_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            std::optional<GTemplate> f;
            if (kind == "connecting") {
                auto cd = connecting_data(w);
                Rational pad = cd.t_plus - cd.t_minus;
                f = connecting_template(w, cd.t_minus - pad, cd.t_plus + pad);
            } else if (kind == "bump") {
                Rational t0 = Rational::parse(t0_str);
                Rational t1 = Rational::parse(t1_str);
                if (w.contains_zero())
                    f = bump_template_eps(w, t0, t1,
                                          eps_str == "0" ? Rational(1, 10)
                                                         : Rational::parse(eps_str));
                else
                    f = bump_template(w, t0, t1);
            } else if (kind == "divergent") {
                f = divergent_template(w, Rational::parse(horizon_str)).tpl;
            } else {
                std::cerr << "unknown construction kind: " << kind << "\n";
                return 2;
            }
            write_output(out_path, as_svg ? to_svg(*f) : to_json(*f));
            return 0;
        }
        if (dims_cmd->parsed()) {
            Weights w = parse_weights(weights_csv);
            auto p = dimension_profile(w);
            nlohmann::json j;
            j["D"] = p.d_total.str();
            j["Xi"] = p.xi.str();
            j["D_minus_Xi"] = (p.d_total - p.xi).str();
            j["zetas"] = nlohmann::json::array();
            for (const auto& z : p.zetas) j["zetas"].push_back(z.str());
            j["F_upper"] = nlohmann::json::array();
            for (size_t i = 0; i < p.f_upper.xs().size(); ++i)
                j["F_upper"].push_back({p.f_upper.xs()[i].str(), p.f_upper.ys()[i].str()});
            j["F_lower"] = nlohmann::json::array();
            for (size_t i = 0; i < p.f_lower.xs().size(); ++i)
                j["F_lower"].push_back({p.f_lower.xs()[i].str(), p.f_lower.ys()[i].str()});
            write_output(out_path, j.dump(2));
            return 0;
        }
        if (verify_cmd->parsed()) {
            std::ostringstream os;
            if (what == "appendix") {
                auto report = check_appendix(max_value);
                os << "checked " << report.checked << " tuples, zero cases "
                   << report.zero_cases.size() << ", negative cases "
                   << report.negative_cases.size() << "\n";
                write_output(out_path, os.str());
                return report.all_nonnegative ? 0 : 1;
            }
            if (what == "pre-h") {
                Weights w = parse_weights(weights_csv);
                bool ok = true;
                for (int np = 1; np <= w.n() - 1; ++np) {
                    if (w.count_positive() > np || w.count_negative() > w.n() - np) continue;
                    auto report = check_preH(w, np);
                    ok = ok && report.all_hold;
                    os << "n_+=" << np << ": " << (report.all_hold ? "holds" : "FAILS")
                       << ", equality cases " << report.equality_cases.size() << "\n";
                }
                write_output(out_path, os.str());
                return ok ? 0 : 1;
            }
            if (what == "poset") {
                Weights w = parse_weights(weights_csv);
                auto all = enumerate_full_filtrations(w);
                long long ok_pairs = 0, incomparable = 0;
                for (const auto& f : all)
                    for (const auto& g : all) {
                        if (filtration_leq(f, g)) {
                            auto flips = flip_decompose(f, g);
                            DirectionFiltration cur = f;
                            for (const auto& flip : flips) cur = flip_apply(cur, flip);
                            if (!(cur == g)) {
                                write_output(out_path, "fold mismatch\n");
                                return 1;
                            }
                            ++ok_pairs;
                        } else {
                            bool threw = false;
                            try {
                                flip_decompose(f, g);
                            } catch (const Error& e) {
                                threw = std::string(e.code()) == "NotComparable";
                            }
                            if (!threw) {
                                write_output(out_path, "missing NotComparable\n");
                                return 1;
                            }
                            ++incomparable;
                        }
                    }
                os << all.size() << " filtrations, " << ok_pairs << " comparable pairs, "
                   << incomparable << " incomparable pairs, all consistent\n";
                write_output(out_path, os.str());
                return 0;
            }
            std::cerr << "unknown verification: " << what << "\n";
            return 2;
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
