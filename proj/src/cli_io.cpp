#include "sdpc/cli_io.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "sdpc/catalog.hpp"
#include "sdpc/context.hpp"
#include "sdpc/error.hpp"
#include "sdpc/pipeline.hpp"

namespace sdpc {

using nlohmann::json;

namespace {

std::string strip_punctuation(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
  }
  return s;
}

bool is_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '"' || line[pos] == '*';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-comment line, or nullopt at end of input.
  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (!is_comment(line)) return line;
    }
    return std::nullopt;
  }
  int number() const { return number_; }

 private:
  std::istream& in_;
  int number_ = 0;
};

[[noreturn]] void parse_error(int line, const std::string& what) {
  fail(ErrorKind::Parse, "sdpa line " + std::to_string(line) + ": " + what);
}

/// Leading integer of a header line such as "3 = mDIM".
long leading_int(LineReader& r, const char* what) {
  const auto line = r.next();
  if (!line) parse_error(r.number(), std::string("missing ") + what);
  std::istringstream is(strip_punctuation(*line));
  long v = 0;
  if (!(is >> v)) parse_error(r.number(), std::string("malformed ") + what);
  return v;
}

/// `count` numbers that may span several lines.
std::vector<double> numbers(LineReader& r, long count, const char* what) {
  std::vector<double> out;
  while (static_cast<long>(out.size()) < count) {
    const auto line = r.next();
    if (!line) parse_error(r.number(), std::string("missing ") + what);
    std::istringstream is(strip_punctuation(*line));
    std::string tok;
    while (static_cast<long>(out.size()) < count && is >> tok) {
      // Trailing labels such as "=bLOCKsTRUCT" end the line.
      if (tok.front() == '=' || std::isalpha(static_cast<unsigned char>(tok.front()))) break;
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) parse_error(r.number(), std::string("malformed ") + what + " entry '" + tok + "'");
      out.push_back(v);
    }
  }
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols) fail(ErrorKind::Parse, "report: ragged matrix");
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json face_json(const Face& f) { return {{"q", matrix_json(f.q().dense())}, {"rank", f.rank()}}; }

Face face_from(const json& j) { return Face(OrthogonalMatrix(matrix_from(j.at("q"))), j.at("rank").get<int>()); }

json value_json(const ExtendedReal& v) {
  if (v.is_finite()) return {{"finite", v.value()}};
  return v.to_string();
}

ExtendedReal value_from(const json& j) {
  if (j.is_object()) return ExtendedReal::finite(j.at("finite").get<double>());
  const std::string s = j.get<std::string>();
  if (s == "+inf") return ExtendedReal::pos_inf();
  if (s == "-inf") return ExtendedReal::neg_inf();
  fail(ErrorKind::Parse, "report: bad value '" + s + "'");
}

Attainment attainment_from(const std::string& s) {
  for (Attainment a : {Attainment::Yes, Attainment::No, Attainment::NotApplicable}) {
    if (s == to_string(a)) return a;
  }
  fail(ErrorKind::Parse, "report: bad attainment '" + s + "'");
}

json certificate_json(const Certificate& cert) {
  if (const auto* c = std::get_if<ReducingChain>(&cert)) {
    json steps = json::array();
    for (const ReducingStep& st : c->steps) {
      steps.push_back({{"direction", matrix_json(st.direction.dense())},
                       {"before", face_json(st.before)},
                       {"after", st.after ? face_json(*st.after) : json(nullptr)},
                       {"c_dot", st.c_dot},
                       {"low_confidence", st.low_confidence}});
    }
    return {{"type", "reducing-chain"},
            {"subject", to_string(c->subject)},
            {"theta", c->theta},
            {"terminal", c->terminal == ReducingChain::Terminal::MinimalFaceFound ? "minimal-face" : "infeasible"},
            {"steps", std::move(steps)}};
  }
  const auto& w = std::get<StrongInfeasibilityWitness>(cert);
  json out = {{"type", "strong-infeasibility-witness"},
              {"side", w.side == StrongInfeasibilityWitness::Side::Primal ? "primal" : "dual"}};
  if (w.side == StrongInfeasibilityWitness::Side::Primal) {
    out["y"] = vector_json(w.y);
  } else {
    out["x"] = matrix_json(w.x.dense());
  }
  return out;
}

Certificate certificate_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "reducing-chain") {
    ReducingChain c;
    c.subject = chain_subject_from_string(j.at("subject").get<std::string>());
    c.theta = j.at("theta").get<double>();
    const std::string term = j.at("terminal").get<std::string>();
    if (term != "minimal-face" && term != "infeasible") fail(ErrorKind::Parse, "report: bad chain terminal");
    c.terminal = term == "minimal-face" ? ReducingChain::Terminal::MinimalFaceFound
                                        : ReducingChain::Terminal::InfeasibleDetected;
    for (const json& s : j.at("steps")) {
      ReducingStep st;
      st.direction = SymMatrix(matrix_from(s.at("direction")));
      st.before = face_from(s.at("before"));
      if (!s.at("after").is_null()) st.after = face_from(s.at("after"));
      st.c_dot = s.at("c_dot").get<double>();
      st.low_confidence = s.at("low_confidence").get<bool>();
      c.steps.push_back(std::move(st));
    }
    return c;
  }
  if (type != "strong-infeasibility-witness") fail(ErrorKind::Parse, "report: unknown certificate '" + type + "'");
  StrongInfeasibilityWitness w;
  const std::string side = j.at("side").get<std::string>();
  if (side == "primal") {
    w.side = StrongInfeasibilityWitness::Side::Primal;
    w.y = vector_from(j.at("y"));
  } else if (side == "dual") {
    w.side = StrongInfeasibilityWitness::Side::Dual;
    w.x = SymMatrix(matrix_from(j.at("x")));
  } else {
    fail(ErrorKind::Parse, "report: bad witness side '" + side + "'");
  }
  return w;
}

json config_json(const ToleranceConfig& t) {
  return {{"abs", t.abs},       {"rel", t.rel},   {"gap", t.gap},   {"feas", t.feas},
          {"branch", t.branch}, {"sub", t.sub},   {"face", t.face}, {"max_iter", t.max_iter},
          {"epsilon_default", t.epsilon_default}};
}

ToleranceConfig config_from(const json& j) {
  ToleranceConfig t;
  t.abs = j.at("abs").get<double>();
  t.rel = j.at("rel").get<double>();
  t.gap = j.at("gap").get<double>();
  t.feas = j.at("feas").get<double>();
  t.branch = j.at("branch").get<double>();
  t.sub = j.at("sub").get<double>();
  t.face = j.at("face").get<double>();
  t.max_iter = j.at("max_iter").get<int>();
  t.epsilon_default = j.at("epsilon_default").get<double>();
  return t;
}

}  // namespace

SdpProblem parse_sdpa(std::istream& in) {
  LineReader r(in);
  const long m = leading_int(r, "constraint count");
  if (m < 0) parse_error(r.number(), "negative constraint count");
  const long nblocks = leading_int(r, "block count");
  if (nblocks <= 0) parse_error(r.number(), "block count must be positive");
  const std::vector<double> sizes = numbers(r, nblocks, "block structure");
  std::vector<int> offset, size;
  std::vector<bool> diagonal;
  int n = 0;
  for (double s : sizes) {
    if (s == 0 || s != std::floor(s)) parse_error(r.number(), "bad block size");
    offset.push_back(n);
    size.push_back(static_cast<int>(std::abs(s)));
    diagonal.push_back(s < 0);
    n += size.back();
  }
  const std::vector<double> bv = numbers(r, m, "objective vector");
  std::vector<Eigen::MatrixXd> f(m + 1, Eigen::MatrixXd::Zero(n, n));
  std::map<std::tuple<long, long, long, long>, bool> seen;
  while (const auto line = r.next()) {
    std::istringstream is(strip_punctuation(*line));
    long mat = 0, blk = 0, i = 0, j = 0;
    double v = 0.0;
    if (!(is >> mat >> blk >> i >> j >> v)) parse_error(r.number(), "malformed entry");
    if (mat < 0 || mat > m) parse_error(r.number(), "matrix index out of range");
    if (blk < 1 || blk > nblocks) parse_error(r.number(), "block index out of range");
    const int k = size[blk - 1];
    if (i < 1 || j < 1 || i > k || j > k) parse_error(r.number(), "entry index out of range");
    if (i > j) parse_error(r.number(), "entry below the diagonal; only the upper triangle is accepted");
    if (diagonal[blk - 1] && i != j) parse_error(r.number(), "off-diagonal entry in a diagonal block");
    if (!seen.emplace(std::make_tuple(mat, blk, i, j), true).second) parse_error(r.number(), "duplicate entry");
    const int gi = offset[blk - 1] + static_cast<int>(i) - 1;
    const int gj = offset[blk - 1] + static_cast<int>(j) - 1;
    f[mat](gi, gj) = v;
    f[mat](gj, gi) = v;
  }
  std::vector<SymMatrix> mats;
  for (long k = 1; k <= m; ++k) mats.emplace_back(f[k]);
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bv.data(), m);
  return SdpProblem(LinearMapA(n, mats), b, SymMatrix(Eigen::MatrixXd(-f[0])));
}

SdpProblem read_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_sdpa(in);
}

void write_sdpa(const SdpProblem& p, std::ostream& out) {
  const int n = p.n();
  const int m = p.m();
  out << std::setprecision(17);
  out << m << " = mDIM\n1 = nBLOCK\n" << n << " = bLOCKsTRUCT\n";
  for (int i = 0; i < m; ++i) out << (i ? " " : "") << p.b(i);
  out << "\n";
  const auto entries = [&](int k, const SymMatrix& a, double sign) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (a(i, j) != 0.0) out << k << " 1 " << i + 1 << " " << j + 1 << " " << sign * a(i, j) << "\n";
  };
  entries(0, p.c, -1.0);
  for (int k = 0; k < m; ++k) entries(k + 1, p.a.mats()[k], 1.0);
}

void write_sdpa(const SdpProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_sdpa(p, out);
}

json report_to_json(const SolveReport& r) {
  json j;
  j["orientation"] = r.orientation == Orientation::Primal ? "primal" : "dual";
  j["status"] = to_string(r.status);
  j["value"] = value_json(r.value);
  j["attained"] = to_string(r.attained);
  if (r.solution) {
    j["solution"] = {{"y", r.solution->y ? vector_json(*r.solution->y) : json(nullptr)},
                     {"matrix", matrix_json(r.solution->matrix.dense())},
                     {"objective", r.solution->objective},
                     {"rank", r.solution->rank}};
  } else {
    j["solution"] = nullptr;
  }
  j["certificates"] = json::array();
  for (const Certificate& c : r.certificates) j["certificates"].push_back(certificate_json(c));
  j["partition"] = r.partition ? json{{"blocks", r.partition->blocks}, {"s", r.partition->s}} : json(nullptr);
  j["epsilon_points"] = json::array();
  for (const EpsilonPoint& e : r.epsilon_points) {
    j["epsilon_points"].push_back(
        {{"kind", e.kind == EpsilonPoint::Kind::Optimal ? "optimal" : "near-feasible"},
         {"epsilon", e.epsilon},
         {"y", e.y ? vector_json(*e.y) : json(nullptr)},
         {"matrix", matrix_json(e.matrix.dense())},
         {"objective", e.objective ? json(*e.objective) : json(nullptr)},
         {"dist_to_psd", e.dist_to_psd}});
  }
  j["diagnostics"] = r.diagnostics;
  j["contract_violation"] = r.contract_violation;
  j["oracle_calls"] = r.oracle_calls;
  j["trace"] = json::array();
  for (const TraceEntry& t : r.trace) {
    j["trace"].push_back({{"kind", t.kind},
                          {"n", t.n},
                          {"m", t.m},
                          {"iterations", t.iterations},
                          {"primal_objective", t.primal_objective},
                          {"dual_objective", t.dual_objective},
                          {"gap", t.gap},
                          {"ok", t.ok}});
  }
  j["config"] = config_json(r.config);
  return j;
}

SolveReport report_from_json(const json& j) {
  try {
    SolveReport r;
    const std::string orient = j.at("orientation").get<std::string>();
    if (orient != "dual" && orient != "primal") fail(ErrorKind::Parse, "report: bad orientation");
    r.orientation = orient == "primal" ? Orientation::Primal : Orientation::Dual;
    r.status = feas_status_from_string(j.at("status").get<std::string>());
    r.value = value_from(j.at("value"));
    r.attained = attainment_from(j.at("attained").get<std::string>());
    if (const json& s = j.at("solution"); !s.is_null()) {
      Solution sol;
      if (!s.at("y").is_null()) sol.y = vector_from(s.at("y"));
      sol.matrix = SymMatrix(matrix_from(s.at("matrix")));
      sol.objective = s.at("objective").get<double>();
      sol.rank = s.at("rank").get<int>();
      r.solution = std::move(sol);
    }
    for (const json& c : j.at("certificates")) r.certificates.push_back(certificate_from(c));
    if (const json& p = j.at("partition"); !p.is_null()) {
      r.partition = PartitionSummary{p.at("blocks").get<std::vector<int>>(), p.at("s").get<int>()};
    }
    for (const json& e : j.at("epsilon_points")) {
      EpsilonPoint pt;
      pt.kind = e.at("kind").get<std::string>() == "optimal" ? EpsilonPoint::Kind::Optimal
                                                             : EpsilonPoint::Kind::NearFeasible;
      pt.epsilon = e.at("epsilon").get<double>();
      if (!e.at("y").is_null()) pt.y = vector_from(e.at("y"));
      pt.matrix = SymMatrix(matrix_from(e.at("matrix")));
      if (!e.at("objective").is_null()) pt.objective = e.at("objective").get<double>();
      pt.dist_to_psd = e.at("dist_to_psd").get<double>();
      r.epsilon_points.push_back(std::move(pt));
    }
    r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    r.contract_violation = j.at("contract_violation").get<bool>();
    r.oracle_calls = j.at("oracle_calls").get<int>();
    for (const json& t : j.at("trace")) {
      TraceEntry e;
      e.kind = t.at("kind").get<std::string>();
      e.n = t.at("n").get<int>();
      e.m = t.at("m").get<int>();
      e.iterations = t.at("iterations").get<int>();
      e.primal_objective = t.at("primal_objective").get<double>();
      e.dual_objective = t.at("dual_objective").get<double>();
      e.gap = t.at("gap").get<double>();
      e.ok = t.at("ok").get<bool>();
      r.trace.push_back(std::move(e));
    }
    r.config = config_from(j.at("config"));
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("report: ") + e.what());
  }
}

void write_report(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << report_to_json(report).dump(2) << "\n";
}

SolveReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, "report '" + path + "': " + e.what());
  }
  return report_from_json(j);
}

ToleranceConfig tolerance_from_env(ToleranceConfig t) {
  const auto read = [](const char* name, auto& field) {
    const char* v = std::getenv(name);
    if (!v || !*v) return;
    char* end = nullptr;
    const double x = std::strtod(v, &end);
    if (end == v || *end != '\0') fail(ErrorKind::Parse, std::string("bad value for ") + name + ": '" + v + "'");
    field = static_cast<std::remove_reference_t<decltype(field)>>(x);
  };
  read("SDPC_TOL_ABS", t.abs);
  read("SDPC_TOL_REL", t.rel);
  read("SDPC_TOL_GAP", t.gap);
  read("SDPC_TOL_FEAS", t.feas);
  read("SDPC_TOL_BRANCH", t.branch);
  read("SDPC_TOL_SUB", t.sub);
  read("SDPC_TOL_FACE", t.face);
  read("SDPC_MAX_ITER", t.max_iter);
  read("SDPC_EPSILON_DEFAULT", t.epsilon_default);
  return t;
}

namespace {

int run_verify(const std::string& report_path, const SdpProblem& problem, const ToleranceConfig& tol) {
  const SolveReport rep = read_report(report_path);
  SdpProblem p = problem;
  p.orientation = rep.orientation;
  bool ok = true;
  for (size_t i = 0; i < rep.certificates.size(); ++i) {
    const VerificationReport v = verify_certificate(p, rep.certificates[i], tol);
    std::cout << "certificate " << i + 1 << ": " << (v.ok ? "ok" : "FAILED") << "\n";
    for (const Residual& res : v.residuals) {
      if (!res.ok()) std::cout << "  " << res.name << ": " << res.value << " > " << res.limit << "\n";
    }
    ok = ok && v.ok;
  }
  for (const std::string& e : rep.consistency_errors()) {
    std::cout << "inconsistent report: " << e << "\n";
    ok = false;
  }
  std::cout << (ok ? "verified" : "verification failed") << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Complete SDP solver based on facial reduction"};
  std::vector<std::string> positional;
  std::string catalog_name, output;
  std::vector<std::string> verify;
  std::vector<double> eps;
  bool primal = false, trace = false, list = false, eps_default = false;
  std::optional<double> t_abs, t_rel, t_gap, t_feas, t_branch, t_sub, t_face, t_eps;
  std::optional<int> t_iter;
  app.add_option("command", positional, "solve <file.dat-s>");
  app.add_flag("--primal", primal, "read the data as inf <c,x> s.t. A x = b, x PSD");
  app.add_option("--eps", eps, "materialize an epsilon point (repeatable)")->allow_extra_args(false);
  app.add_flag("--eps-default", eps_default, "materialize a point at the configured default epsilon");
  app.add_option("--catalog", catalog_name, "solve a built-in instance");
  app.add_flag("--list-catalog", list, "print the built-in instance names");
  app.add_option("--verify", verify, "<report.json> <file>: re-check every certificate")->expected(1, 2);
  app.add_option("-o,--output", output, "report path (default: stdout)");
  app.add_flag("--trace", trace, "record every oracle call");
  app.add_option("--tol-abs", t_abs, "absolute rank threshold");
  app.add_option("--tol-rel", t_rel, "relative rank threshold");
  app.add_option("--tol-gap", t_gap, "oracle duality gap");
  app.add_option("--tol-feas", t_feas, "oracle residuals");
  app.add_option("--tol-branch", t_branch, "zero tests on oracle outputs");
  app.add_option("--tol-sub", t_sub, "subspace membership");
  app.add_option("--tol-face", t_face, "rank of oracle-produced matrices");
  app.add_option("--max-iter", t_iter, "oracle iteration limit");
  app.add_option("--epsilon-default", t_eps, "epsilon used by --eps-default");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (list) {
      for (const auto& e : catalog::all()) std::cout << e.name << "\n";
      return 0;
    }
    ToleranceConfig tol = tolerance_from_env();
    const auto set = [](const auto& opt, auto& field) {
      if (opt) field = *opt;
    };
    set(t_abs, tol.abs);
    set(t_rel, tol.rel);
    set(t_gap, tol.gap);
    set(t_feas, tol.feas);
    set(t_branch, tol.branch);
    set(t_sub, tol.sub);
    set(t_face, tol.face);
    set(t_iter, tol.max_iter);
    set(t_eps, tol.epsilon_default);
    if (!tol.valid()) {
      std::cerr << "error: tolerances must be positive with branch >= gap\n";
      return 1;
    }

    std::string file;
    if (!positional.empty()) {
      if (positional[0] != "solve" || positional.size() > 2) {
        std::cerr << "error: usage: solve <file> | --catalog <name> | --verify <report> <file>\n";
        return 1;
      }
      if (positional.size() == 2) file = positional[1];
    }
    if (verify.size() == 2) file = verify[1];
    if (file.empty() == catalog_name.empty()) {
      std::cerr << "error: give exactly one of a problem file or --catalog\n";
      return 1;
    }
    SdpProblem problem = catalog_name.empty() ? read_sdpa(file) : catalog::find(catalog_name).problem;
    if (primal) problem.orientation = Orientation::Primal;

    if (!verify.empty()) return run_verify(verify[0], problem, tol);

    if (eps_default) eps.push_back(tol.epsilon_default);
    Context ctx(tol, trace);
    const SolveReport rep = solve(problem, ctx, {eps});
    const std::string text = report_to_json(rep).dump(2);
    if (output.empty()) {
      std::cout << text << "\n";
    } else {
      std::ofstream out(output);
      if (!(out << text << "\n")) fail(ErrorKind::Io, "cannot write '" + output + "'");
    }
    for (const std::string& d : rep.diagnostics) std::cerr << "diagnostic: " << d << "\n";
    return rep.contract_violation ? 2 : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse ? 1 : 2;
  }
}

}  // namespace sdpc
