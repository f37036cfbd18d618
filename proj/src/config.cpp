#include "kronsolve/config.hpp"

#include <filesystem>
#include <fstream>

#include "kronsolve/matrix_market.hpp"
#include "kronsolve/nkp.hpp"

namespace kronsolve {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key +
                          "': " + e.what());
    }
}

}  // namespace

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: root must be an object");
    RunConfig c;

    const json problem = j.value("problem", json::object());
    c.problem.type = get_or<std::string>(problem, "type", "");
    c.problem.n0 = get_or<Index>(problem, "n0", c.problem.n0);
    c.problem.n = get_or<Index>(problem, "n", c.problem.n);
    c.problem.m = get_or<Index>(problem, "m", c.problem.m);
    c.problem.epsilon = get_or<double>(problem, "epsilon", c.problem.epsilon);
    c.problem.r = get_or<int>(problem, "r", c.problem.r);
    c.problem.band = get_or<Index>(problem, "band", c.problem.band);
    c.problem.spd = get_or<bool>(problem, "spd", c.problem.spd);
    c.problem.seed = get_or<std::uint64_t>(problem, "seed", c.problem.seed);
    c.problem.manifest = get_or<std::string>(problem, "manifest", "");
    c.problem.rhs = get_or<std::string>(problem, "rhs", "");
    c.problem.A1 = get_or<std::string>(problem, "A1", "");
    c.problem.A2 = get_or<std::string>(problem, "A2", "");
    c.problem.b = get_or<std::string>(problem, "b", "");

    const json solver = j.value("solver", json::object());
    c.solver.method = get_or<std::string>(solver, "method", c.solver.method);
    c.solver.tol = get_or<double>(solver, "tol", c.solver.tol);
    c.solver.restart = get_or<int>(solver, "restart", c.solver.restart);
    c.solver.max_iter = get_or<int>(solver, "max_iter", c.solver.max_iter);
    c.solver.track_bandwidth =
        get_or<bool>(solver, "track_bandwidth", c.solver.track_bandwidth);

    const json precond = j.value("preconditioner", json::object());
    c.precond.type = get_or<std::string>(precond, "type", c.precond.type);
    c.precond.q = get_or<int>(precond, "q", c.precond.q);
    c.precond.route = get_or<std::string>(precond, "route", c.precond.route);
    c.precond.symmetrize =
        get_or<bool>(precond, "symmetrize", c.precond.symmetrize);
    if (precond.contains("als")) {
        const json& als = precond.at("als");
        c.precond.als_tol = get_or<double>(als, "tol", c.precond.als_tol);
        c.precond.als_max_iter =
            get_or<int>(als, "max_iter", c.precond.als_max_iter);
    }
    if (precond.contains("sparsity") && !precond.at("sparsity").is_null()) {
        const json& sp = precond.at("sparsity");
        SparsityConfig s;
        s.variant = get_or<std::string>(sp, "variant", s.variant);
        s.power = get_or<int>(sp, "power", s.power);
        s.density_cap = get_or<double>(sp, "density_cap", s.density_cap);
        c.precond.sparsity = s;
    }

    const json output = j.value("output", json::object());
    c.output.dir = get_or<std::string>(output, "dir", c.output.dir);
    c.output.prefix = get_or<std::string>(output, "prefix", c.output.prefix);

    c.threads = get_or<int>(j, "threads", c.threads);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const RunConfig& c) {
    json problem{{"type", c.problem.type},       {"n0", c.problem.n0},
                 {"n", c.problem.n},             {"m", c.problem.m},
                 {"epsilon", c.problem.epsilon}, {"r", c.problem.r},
                 {"band", c.problem.band},       {"spd", c.problem.spd},
                 {"seed", c.problem.seed}};
    if (!c.problem.manifest.empty()) problem["manifest"] = c.problem.manifest;
    if (!c.problem.rhs.empty()) problem["rhs"] = c.problem.rhs;
    if (!c.problem.A1.empty()) problem["A1"] = c.problem.A1;
    if (!c.problem.A2.empty()) problem["A2"] = c.problem.A2;
    if (!c.problem.b.empty()) problem["b"] = c.problem.b;

    json precond{{"type", c.precond.type},
                 {"q", c.precond.q},
                 {"route", c.precond.route},
                 {"symmetrize", c.precond.symmetrize},
                 {"als",
                  {{"tol", c.precond.als_tol},
                   {"max_iter", c.precond.als_max_iter}}}};
    if (c.precond.sparsity) {
        precond["sparsity"] = {{"variant", c.precond.sparsity->variant},
                               {"power", c.precond.sparsity->power},
                               {"density_cap", c.precond.sparsity->density_cap}};
    }

    return json{{"problem", problem},
                {"solver",
                 {{"method", c.solver.method},
                  {"tol", c.solver.tol},
                  {"restart", c.solver.restart},
                  {"max_iter", c.solver.max_iter},
                  {"track_bandwidth", c.solver.track_bandwidth}}},
                {"preconditioner", precond},
                {"output", {{"dir", c.output.dir}, {"prefix", c.output.prefix}}},
                {"threads", c.threads}};
}

void validate(const RunConfig& c) {
    const std::string& t = c.problem.type;
    if (t != "circuit" && t != "convdiff" && t != "synthetic" && t != "files")
        throw ConfigError("config: problem.type must be one of circuit, "
                          "convdiff, synthetic, files (got '" + t + "')");
    if (t == "files") {
        if (c.problem.manifest.empty() || c.problem.rhs.empty())
            throw ConfigError("config: files problem needs manifest and rhs");
        if (!fs::exists(c.problem.manifest))
            throw ConfigError("config: manifest '" + c.problem.manifest +
                              "' does not exist");
        if (!fs::exists(c.problem.rhs))
            throw ConfigError("config: rhs '" + c.problem.rhs +
                              "' does not exist");
    }
    if (c.solver.method != "gmres" && c.solver.method != "bicgstab")
        throw ConfigError("config: solver.method must be gmres or bicgstab");
    if (!(c.solver.tol > 0.0)) throw ConfigError("config: tol must be > 0");
    if (c.solver.restart < 1) throw ConfigError("config: restart must be >= 1");
    if (c.solver.max_iter < 1)
        throw ConfigError("config: max_iter must be >= 1");

    const std::string& p = c.precond.type;
    if (p != "none" && p != "nkp" && p != "kinv" && p != "baseline")
        throw ConfigError("config: preconditioner.type must be one of none, "
                          "nkp, kinv, baseline (got '" + p + "')");
    if (p != "none" && c.precond.q < 1)
        throw ConfigError("config: preconditioner.q must be >= 1");
    if (p == "nkp" && c.precond.route != "svd" && c.precond.route != "als")
        throw ConfigError("config: nkp route must be svd or als");
    if (c.precond.sparsity) {
        const auto& s = *c.precond.sparsity;
        if (s.variant != "gram" && s.variant != "plain")
            throw ConfigError("config: sparsity.variant must be gram or plain");
        if (s.power < 0) throw ConfigError("config: sparsity.power must be >= 0");
    }
}

ProblemInstance load_problem(const RunConfig& c) {
    const std::string& t = c.problem.type;
    if (t == "circuit") {
        if (!c.problem.A1.empty()) {
            SparseMatrix A1 = read_matrix_market_sparse(c.problem.A1);
            SparseMatrix A2 = read_matrix_market_sparse(c.problem.A2);
            DenseMatrix bm = read_matrix_market_dense(c.problem.b);
            return circuit_from_blocks(A1, A2, Vector(bm.col(0)));
        }
        return circuit(c.problem.n0);
    }
    if (t == "convdiff")
        return convection_diffusion(c.problem.n, c.problem.epsilon);
    if (t == "synthetic")
        return synthetic_banded(c.problem.n, c.problem.m, c.problem.r,
                                c.problem.band, c.problem.seed, c.problem.spd);
    if (t == "files") {
        KroneckerOperator op = load_manifest(c.problem.manifest);
        DenseMatrix rhs = read_matrix_market_dense(c.problem.rhs);
        ProblemInstance inst{std::move(op), std::move(rhs), std::nullopt,
                             "files", {}};
        inst.metadata = {{"manifest", c.problem.manifest}};
        return inst;
    }
    throw ConfigError("config: unknown problem type '" + t + "'");
}

Preconditioner build_preconditioner(const RunConfig& c,
                                    const ProblemInstance& problem,
                                    json* diagnostics) {
    const std::string& type = c.precond.type;
    if (type == "none") return Preconditioner::none();

    if (type == "baseline") {
        if (!problem.baseline)
            throw ConfigError("config: problem '" + problem.name +
                              "' has no baseline preconditioner");
        return *problem.baseline;
    }

    if (type == "nkp") {
        KronApprox approx;
        if (c.precond.route == "als") {
            NkpAlsOptions opts;
            if (c.precond.als_tol >= 0.0) opts.tol = c.precond.als_tol;
            if (c.precond.als_max_iter > 0) opts.max_iter = c.precond.als_max_iter;
            approx = nkp_als(problem.op, c.precond.q, opts);
        } else {
            approx = nkp_svd(problem.op, c.precond.q);
        }
        if (diagnostics) {
            (*diagnostics)["nkp_q"] = approx.q;
            (*diagnostics)["nkp_error"] = approx.residual;
            if (approx.sigma.size() > 0) {
                std::vector<double> sv(approx.sigma.data(),
                                       approx.sigma.data() + approx.sigma.size());
                (*diagnostics)["nkp_sigma"] = sv;
            }
        }
        return Preconditioner::nkp(std::move(approx));
    }

    // kinv
    KinvOptions opts;
    if (c.precond.als_tol >= 0.0) opts.tol = c.precond.als_tol;
    if (c.precond.als_max_iter > 0) opts.max_iter = c.precond.als_max_iter;
    opts.threads = c.threads;
    KronInverse inv;
    if (c.precond.sparsity) {
        const auto& s = *c.precond.sparsity;
        PatternVariant variant = s.variant == "plain" ? PatternVariant::plain
                                                      : PatternVariant::gram;
        SparsityPattern pc = build_pattern(problem.op, OperatorSide::right,
                                           s.power, variant, s.density_cap);
        SparsityPattern pd = build_pattern(problem.op, OperatorSide::left,
                                           s.power, variant, s.density_cap);
        if (diagnostics) {
            (*diagnostics)["pattern_density_C"] = pc.density();
            (*diagnostics)["pattern_density_D"] = pd.density();
            if (pc.density_warning || pd.density_warning)
                (*diagnostics)["pattern_density_warning"] = true;
        }
        inv = kinv_sparse_als(problem.op, c.precond.q, pc, pd, opts);
    } else {
        inv = kinv_als(problem.op, c.precond.q, opts);
    }
    if (c.precond.symmetrize) inv = symmetrize(problem.op, inv);
    if (diagnostics) {
        (*diagnostics)["kinv_residual"] = inv.final_residual;
        (*diagnostics)["kinv_iterations"] = inv.iterations;
        if (inv.stagnation_warning) (*diagnostics)["kinv_stagnation"] = true;
        if (inv.column_regularization_notice)
            (*diagnostics)["kinv_column_regularization"] = true;
    }
    return Preconditioner::kinv(std::move(inv));
}

std::string write_instance(const std::string& dir, const std::string& prefix,
                           const ProblemInstance& problem) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw IoError("write_instance: cannot create directory '" + dir + "'");

    const KroneckerOperator& op = problem.op;
    json manifest{{"n", op.n()}, {"m", op.m()}, {"r", op.r()}};
    json a_files = json::array(), b_files = json::array();
    auto write_factor = [&](const Factor& f, const std::string& name) {
        const std::string file = prefix + "_" + name + ".mtx";
        const std::string path = (fs::path(dir) / file).string();
        if (f.is_sparse())
            write_matrix_market(path, f.sparse());
        else
            write_matrix_market(path, f.dense());
        return file;
    };
    for (int k = 0; k < op.r(); ++k) {
        a_files.push_back(write_factor(op.A(k), "A" + std::to_string(k + 1)));
        b_files.push_back(write_factor(op.B(k), "B" + std::to_string(k + 1)));
    }
    manifest["A"] = a_files;
    manifest["B"] = b_files;

    write_matrix_market((fs::path(dir) / (prefix + "_rhs.mtx")).string(),
                        problem.rhs);

    const std::string manifest_path =
        (fs::path(dir) / (prefix + "_manifest.json")).string();
    std::ofstream out(manifest_path);
    if (!out) throw IoError("write_instance: cannot write manifest");
    out << manifest.dump(2) << "\n";
    return manifest_path;
}

KroneckerOperator load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_manifest: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("load_manifest: invalid JSON: ") +
                          e.what());
    }
    const fs::path base = fs::path(path).parent_path();
    auto load_list = [&](const char* key) {
        std::vector<Factor> out;
        for (const auto& f : j.at(key)) {
            const fs::path p = base / f.get<std::string>();
            MatrixMarketMatrix M = read_matrix_market(p.string());
            if (auto* s = std::get_if<SparseMatrix>(&M))
                out.emplace_back(std::move(*s));
            else
                out.emplace_back(std::move(std::get<DenseMatrix>(M)));
        }
        return out;
    };
    std::vector<Factor> A = load_list("A");
    std::vector<Factor> B = load_list("B");
    KroneckerOperator op(std::move(A), std::move(B));
    if (j.contains("n") && op.n() != j.at("n").get<Index>())
        throw ConfigError("load_manifest: n does not match the factors");
    if (j.contains("m") && op.m() != j.at("m").get<Index>())
        throw ConfigError("load_manifest: m does not match the factors");
    if (j.contains("r") && op.r() != j.at("r").get<int>())
        throw ConfigError("load_manifest: r does not match the factors");
    return op;
}

}  // namespace kronsolve
