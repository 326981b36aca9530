#include "pbound/cli_app.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "pbound/bound_engine.h"
#include "pbound/error.h"
#include "pbound/regen_sim.h"
#include "pbound/wcl_distance.h"

namespace pbound {

namespace {

using json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Model file parsing

const std::set<std::string> kTopKeys = {
    "model", "lambda", "capacity", "C",    "D",    "service", "regime", "params",
    "envelope", "witness", "grid", "tol", "seed", "reps", "auto"};

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::kParse, what); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) parse_error("unknown key '" + key + "' in " + where);
  }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) parse_error("missing '" + key + "' in " + where);
  const json& v = obj.at(key);
  if (!v.is_number()) parse_error("'" + key + "' in " + where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_error("'" + key + "' in " + where + " must be finite");
  return d;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) parse_error(where + " must hold numbers");
      out.push_back(e.get<double>());
    }
  } else {
    parse_error(where + " must be a number or an array of numbers");
  }
  if (out.empty()) parse_error(where + " is empty");
  return out;
}

Matrix parse_matrix(const json& v, const std::string& name) {
  if (!v.is_array() || v.empty()) parse_error(name + " must be a nonempty array of rows");
  const std::size_t rows = v.size();
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) parse_error(name + " has ragged rows");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) parse_error(name + " entries must be numbers");
      m(i, j) = v[i][j].get<double>();
    }
  }
  return m;
}

ServiceLaw parse_service(const json& v) {
  if (!v.is_object() || !v.contains("family") || !v.at("family").is_string()) {
    parse_error("service must be an object with a string 'family'");
  }
  const std::string family = v.at("family").get<std::string>();
  const std::string where = "service";
  if (family == "exponential") {
    reject_unknown(v, {"family", "rate"}, where);
    return ServiceLaw::exponential(number_at(v, "rate", where));
  }
  if (family == "erlang") {
    reject_unknown(v, {"family", "k", "rate"}, where);
    if (!v.contains("k") || !v.at("k").is_number_integer()) parse_error("erlang needs integer k");
    return ServiceLaw::erlang(v.at("k").get<int>(), number_at(v, "rate", where));
  }
  if (family == "hyperexponential") {
    reject_unknown(v, {"family", "probs", "rates"}, where);
    if (!v.contains("probs") || !v.contains("rates")) parse_error("hyperexponential needs probs and rates");
    return ServiceLaw::hyperexponential(numbers(v.at("probs"), "probs"),
                                        numbers(v.at("rates"), "rates"));
  }
  if (family == "deterministic") {
    reject_unknown(v, {"family", "value"}, where);
    return ServiceLaw::deterministic(number_at(v, "value", where));
  }
  if (family == "weibull_tail") {
    reject_unknown(v, {"family", "shape", "scale"}, where);
    return ServiceLaw::weibull_tail(number_at(v, "shape", where), number_at(v, "scale", where));
  }
  if (family == "pareto_tail") {
    reject_unknown(v, {"family", "shape", "scale"}, where);
    return ServiceLaw::pareto_tail(number_at(v, "shape", where), number_at(v, "scale", where));
  }
  parse_error("unknown service family '" + family + "'");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      parse_error("grid '" + text + "' must be a:b:step");
    }
  }
  if (parts.size() != 3) parse_error("grid '" + text + "' must be a:b:step");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(step > 0.0) || !(b >= a) || !(a >= 0.0)) {
    parse_error("grid needs 0 <= a <= b and step > 0");
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double x = a + step * k;
    if (x > b + 1e-9 * step) break;
    out.push_back(x);
    if (out.size() > 100000) parse_error("grid has too many points");
  }
  return out;
}

struct Spec {
  json input;
  bool is_map = false;
  std::optional<MarkovArrivalProcess> map;
  std::optional<ServiceLaw> law;
  double lambda = 0.0;
  double capacity = kInf;
  std::string regime;
  json params;
  std::optional<TailEnvelope> envelope;
  std::vector<double> t0s;
  std::vector<double> x0s;
  std::vector<double> grid;
  double tol = 1e-3;
  std::optional<std::uint64_t> seed;
  std::uint64_t reps = 10000;
  bool auto_search = false;
};

Spec parse_spec(const std::string& text, const CliOptions& options) {
  Spec s;
  try {
    s.input = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_error(std::string("model file is not valid: ") + e.what());
  }
  if (!s.input.is_object()) parse_error("model file must hold a single object");
  reject_unknown(s.input, kTopKeys, "model file");

  if (options.seed) s.input["seed"] = *options.seed;
  if (options.reps) s.input["reps"] = *options.reps;
  if (options.grid) s.input["grid"] = *options.grid;
  if (options.tol) s.input["tol"] = *options.tol;
  if (options.regime) s.input["regime"] = *options.regime;
  if (options.auto_search) s.input["auto"] = true;
  const json& in = s.input;

  if (!in.contains("model") || !in.at("model").is_string()) parse_error("missing 'model'");
  const std::string kind = in.at("model").get<std::string>();
  if (kind != "map_gi1" && kind != "mg1_wcl") parse_error("model must be map_gi1 or mg1_wcl");
  s.is_map = kind == "map_gi1";
  if (!in.contains("service")) parse_error("missing 'service'");
  s.law = parse_service(in.at("service"));

  if (s.is_map) {
    for (const char* key : {"lambda", "capacity", "envelope"}) {
      if (in.contains(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("'") + key + "' does not apply to map_gi1 models");
      }
    }
    if (!in.contains("C") || !in.contains("D")) parse_error("map_gi1 needs C and D");
    s.map = validate_map(parse_matrix(in.at("C"), "C"), parse_matrix(in.at("D"), "D"));
    s.regime = "map_gi1_exp";
    if (in.contains("regime")) {
      throw Error(ErrorCode::kInvalidArgument, "regime selection applies to mg1_wcl models");
    }
    std::vector<double> t0s, x0s;
    for (int k = 1; k <= 40; ++k) {
      t0s.push_back(0.05 * k);
      x0s.push_back(0.05 * k);
    }
    if (in.contains("witness")) {
      const json& w = in.at("witness");
      if (!w.is_object()) parse_error("witness must be an object");
      reject_unknown(w, {"t0", "x0"}, "witness");
      if (w.contains("t0")) t0s = numbers(w.at("t0"), "witness t0");
      if (w.contains("x0")) x0s = numbers(w.at("x0"), "witness x0");
    }
    s.t0s = std::move(t0s);
    s.x0s = std::move(x0s);
  } else {
    for (const char* key : {"C", "D", "witness"}) {
      if (in.contains(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("'") + key + "' does not apply to mg1_wcl models");
      }
    }
    s.lambda = number_at(in, "lambda", "model file");
    s.map = MarkovArrivalProcess::poisson(s.lambda);
    if (in.contains("capacity")) {
      const json& c = in.at("capacity");
      if (c.is_string() && c.get<std::string>() == "inf") {
        s.capacity = kInf;
      } else if (c.is_number()) {
        s.capacity = c.get<double>();
        if (!(s.capacity > 0.0) || !std::isfinite(s.capacity)) {
          throw Error(ErrorCode::kInvalidArgument, "capacity must be positive or \"inf\"");
        }
      } else {
        parse_error("capacity must be a number or \"inf\"");
      }
    }
    s.regime = "light";
    if (in.contains("regime")) {
      if (!in.at("regime").is_string()) parse_error("regime must be a string");
      s.regime = in.at("regime").get<std::string>();
    }
    if (s.regime != "light" && s.regime != "moderate" && s.regime != "polynomial") {
      parse_error("regime must be light, moderate or polynomial");
    }
    if (s.regime != "light") {
      if (!in.contains("envelope")) parse_error(s.regime + " regime needs an envelope");
      const json& e = in.at("envelope");
      if (!e.is_object()) parse_error("envelope must be an object");
      if (s.regime == "moderate") {
        reject_unknown(e, {"constant", "gamma", "beta"}, "envelope");
        s.envelope = ModerateEnvelope{number_at(e, "constant", "envelope"),
                                      number_at(e, "gamma", "envelope"),
                                      number_at(e, "beta", "envelope")};
      } else {
        reject_unknown(e, {"constant", "kappa"}, "envelope");
        s.envelope = PolynomialEnvelope{number_at(e, "constant", "envelope"),
                                        number_at(e, "kappa", "envelope")};
      }
    } else if (in.contains("envelope")) {
      throw Error(ErrorCode::kInvalidArgument, "light regime takes no envelope");
    }
  }

  if (in.contains("params")) {
    s.params = in.at("params");
    if (!s.params.is_object()) parse_error("params must be an object");
    if (s.regime == "light" || s.regime == "map_gi1_exp") {
      reject_unknown(s.params, {"theta"}, "params");
    } else if (s.regime == "moderate") {
      reject_unknown(s.params, {"epsilon", "x0", "rho_tilde"}, "params");
    } else {
      reject_unknown(s.params, {"kappa_tilde", "x0", "rho_tilde"}, "params");
    }
  }
  if (in.contains("auto")) {
    if (!in.at("auto").is_boolean()) parse_error("auto must be true or false");
    s.auto_search = in.at("auto").get<bool>();
  }
  s.grid = parse_grid(in.contains("grid") ? in.at("grid").get<std::string>() : "0:4.5:0.5");
  if (in.contains("tol")) {
    s.tol = number_at(in, "tol", "model file");
    if (!(s.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  }
  if (in.contains("seed")) {
    if (!in.at("seed").is_number_unsigned()) parse_error("seed must be an unsigned integer");
    s.seed = in.at("seed").get<std::uint64_t>();
  }
  if (in.contains("reps")) {
    if (!in.at("reps").is_number_unsigned()) parse_error("reps must be a positive integer");
    s.reps = in.at("reps").get<std::uint64_t>();
    if (s.reps < 100) throw Error(ErrorCode::kInvalidArgument, "reps must be at least 100");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Report pieces

json prov(double value, const std::string& provenance) {
  json j;
  if (std::isfinite(value)) {
    j["value"] = value;
  } else {
    j["value"] = value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
  }
  j["provenance"] = provenance;
  return j;
}

struct Built {
  DriftCertificate cert;
  json info;
};

Built build_certificate(const Spec& s) {
  const ServiceLaw& law = *s.law;
  const bool manual = s.params.is_object() && !s.params.empty() && !s.auto_search;
  json params;
  if (s.regime == "light" || s.regime == "map_gi1_exp") {
    double theta = 0.0;
    std::string how;
    if (manual) {
      theta = number_at(s.params, "theta", "params");
      how = "model file";
    } else {
      theta = select_theta(*s.map, law);
      how = "select_theta max-margin log grid";
    }
    DriftCertificate cert = s.is_map ? build_map_gi1(*s.map, law, theta)
                                     : build_mg1_light(s.lambda, law, theta);
    params["theta"] = prov(theta, how);
    if (const auto* r = std::get_if<MapGi1Exp>(&cert.regime)) {
      params["sigma"] = prov(r->sigma, "Perron eigenvalue of C + H^(theta) D");
      json u = json::array();
      for (Eigen::Index i = 0; i < r->u.size(); ++i) u.push_back(r->u(i));
      params["u"] = {{"value", u}, {"provenance", "Perron vector, max entry 1"}};
    } else {
      const auto& l = std::get<Mg1Light>(cert.regime);
      params["sigma"] = prov(l.sigma, "-lambda + lambda H^(theta)");
    }
    return {std::move(cert), params};
  }
  if (!manual && !s.auto_search) {
    throw Error(ErrorCode::kInvalidArgument,
                s.regime + " regime needs params in the model file or --auto");
  }
  const std::string how = manual ? "model file" : "coarse-to-fine prefactor search";
  if (s.regime == "moderate") {
    const auto& env = std::get<ModerateEnvelope>(*s.envelope);
    DriftCertificate cert =
        manual ? build_mg1_moderate(s.lambda, law, env,
                                    ModerateParams{number_at(s.params, "epsilon", "params"),
                                                   number_at(s.params, "x0", "params"),
                                                   number_at(s.params, "rho_tilde", "params")})
               : search_mg1_moderate(s.lambda, law, env);
    const auto& r = std::get<Mg1Moderate>(cert.regime);
    params["epsilon"] = prov(r.epsilon, how);
    params["beta"] = prov(r.beta, "envelope");
    params["x0"] = prov(r.x0, how);
    params["x0_floor"] = prov(moderate_x0_floor(r.epsilon, r.beta), "convexity floor");
    params["rho_tilde"] = prov(r.rho_tilde, how);
    params["sufficient_integral"] =
        prov(r.sufficient, "lambda int H-bar(y) exp(epsilon y^beta) dy");
    return {std::move(cert), params};
  }
  const auto& env = std::get<PolynomialEnvelope>(*s.envelope);
  DriftCertificate cert =
      manual ? build_mg1_polynomial(
                   s.lambda, law, env,
                   PolynomialParams{number_at(s.params, "kappa_tilde", "params"),
                                    number_at(s.params, "x0", "params"),
                                    number_at(s.params, "rho_tilde", "params")})
             : search_mg1_polynomial(s.lambda, law, env);
  const auto& r = std::get<Mg1Polynomial>(cert.regime);
  params["kappa_tilde"] = prov(r.kappa_tilde, how);
  params["x0"] = prov(r.x0, how);
  params["rho_tilde"] = prov(r.rho_tilde, how);
  params["sufficient_integral"] =
      prov(r.sufficient, "lambda int H-bar(y) (1 + y/x0)^(kappa_tilde - 1) dy");
  return {std::move(cert), params};
}

json certificate_json(const Spec& s, const Built& built) {
  const DriftCertificate& c = built.cert;
  const double x_hi = std::max(s.grid.back(), 10.0 * c.law.mean());
  const GeneratorCheck g = check_generator(c, x_hi);
  json j;
  j["regime"] = c.regime_name();
  j["parameters"] = built.info;
  j["b"] = prov(c.b, c.regime_name() == "light" || c.regime_name() == "map_gi1_exp"
                         ? "b = theta"
                         : "(1 - rho_tilde) V'(0) + lambda int H-bar V' dy");
  j["f_inf"] = prov(c.f_inf, "inf of f over the state space");
  j["rho"] = prov(c.rho, "lambda E[S]");
  j["pi_small_set"] = prov(c.pi_small_set, "1 - rho");
  j["atom_phase"] = c.i0;
  j["generator_check"] = {{"passed", g.passed},
                          {"worst_excess", g.worst_excess},
                          {"worst_x", g.worst_x},
                          {"worst_phase", g.worst_phase},
                          {"points", g.points},
                          {"x_hi", x_hi}};
  return j;
}

json witness_json(const ReturnWitness& w) {
  json j;
  j["provenance"] = w.provenance_name();
  if (const auto* f = std::get_if<MapGi1Formula>(&w.provenance)) {
    j["t0"] = f->t0;
    j["x0"] = f->x0;
    j["T"] = prov(w.t, "t0 + M x0");
    j["xi"] = prov(w.xi, "H(x0)^M min_i [exp(C t0) (D exp(C x0))^M](i, i0)");
  }
  if (const auto* sc = std::get_if<SpecialCaseLimit>(&w.provenance)) {
    j["min_rate"] = prov(sc->min_rate, "min over i != i0 of C(i, i0)");
  }
  j["ratio"] = prov(w.ratio, "T / xi");
  j["atom_phase"] = w.i0;
  return j;
}

json bound_json(const BoundReport& r) {
  json j;
  j["kind"] = r.kind == BoundKind::kAtom ? "atom" : "general";
  j["pi_g_abs"] = prov(r.pi_g_abs, "b pi(C)");
  j["prefactor"] = prov(r.prefactor, "1 + pi_g_abs / f_inf");
  j["additive"] = prov(r.additive, r.kind == BoundKind::kAtom ? "none" : "b T / xi");
  return j;
}

struct Bounds {
  Built built;
  BoundReport main;
  json report;
};

Bounds compute_bounds(const Spec& s) {
  Built built = build_certificate(s);
  json report;
  report["certificate"] = certificate_json(s, built);
  if (!s.is_map) {
    BoundReport main = atom_bound(built.cert);
    report["bound"] = bound_json(main);
    return {std::move(built), std::move(main), std::move(report)};
  }
  const ReturnWitness w = optimize_witness(*s.map, *s.law, built.cert.i0, s.t0s, s.x0s);
  BoundReport main = general_bound(built.cert, w);
  report["witness"] = witness_json(w);
  report["bound"] = bound_json(main);
  json special;
  try {
    const ReturnWitness sw = map_gi1_witness_special(*s.map, built.cert.i0);
    const BoundReport sb = general_bound(built.cert, sw);
    special["available"] = true;
    special["witness"] = witness_json(sw);
    special["bound"] = bound_json(sb);
    special["not_above_grid_bound"] = sb.additive <= main.additive;
    if (sb.additive > main.additive) {
      special["discrepancy"] = prov(sb.additive - main.additive, "additive difference");
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kConditionViolated) throw;
    special["available"] = false;
    special["reason"] = e.what();
  }
  report["special_case"] = special;
  return {std::move(built), std::move(main), std::move(report)};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_header(bool is_map) {
  return is_map ? "x,phase,bound,estimate,std_error\n" : "x,bound,estimate,std_error\n";
}

// ---------------------------------------------------------------------------
// Commands

CliResult cmd_bound(const Spec& s) {
  Bounds b = compute_bounds(s);
  json report;
  report["command"] = "bound";
  report["input"] = s.input;
  for (auto& [key, value] : b.report.items()) report[key] = value;
  json curve = json::array();
  std::string csv = csv_header(s.is_map);
  for (double x : s.grid) {
    for (int i = 0; i < b.built.cert.phases(); ++i) {
      const double v = evaluate_bound(b.main, x, i);
      json p = {{"x", x}};
      if (s.is_map) p["phase"] = i;
      p["bound"] = v;
      curve.push_back(p);
      csv += num(x) + (s.is_map ? "," + std::to_string(i) : "") + "," + num(v) + ",,\n";
    }
  }
  report["curve"] = curve;
  return {kExitOk, report.dump(2) + "\n", csv, ""};
}

CliResult cmd_wcl_distance(const Spec& s) {
  if (s.is_map) {
    throw Error(ErrorCode::kInvalidArgument, "wcl-distance needs an mg1_wcl model");
  }
  Built built = build_certificate(s);
  const DistanceBound d =
      wcl_distance_bound(WclModel{s.lambda, *s.law, s.capacity}, built.cert, s.tol);
  json report;
  report["command"] = "wcl-distance";
  report["input"] = s.input;
  report["certificate"] = certificate_json(s, built);
  json dj;
  dj["value"] = prov(d.value, "refined series sum + quadrature error + truncation bound");
  dj["m_used"] = d.m_used;
  dj["truncation_error"] = prov(d.truncation_error, "rho^(m+1) lambda prefactor sup_term");
  dj["quadrature_error"] = prov(d.quadrature_error, "grid refinement difference");
  dj["prefactor"] = prov(d.prefactor, "lambda (1 + b (1 - rho) / f_inf)");
  dj["sup_term"] = prov(d.sup_term, "inner integral at x = L");
  dj["cells"] = d.cells;
  dj["requested_tol"] = s.tol;
  json terms = json::array();
  for (const auto& t : d.terms) terms.push_back({{"m", t.m}, {"term", t.value}});
  dj["terms"] = terms;
  report["distance"] = dj;
  std::ostringstream csv;
  d.write_terms_csv(csv);
  return {kExitOk, report.dump(2) + "\n", csv.str(), ""};
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

json estimate_json(const RegenerativeEstimate& e, const std::string& provenance) {
  return {{"value", e.point},
          {"std_error", e.std_error},
          {"n", e.n},
          {"seed", e.seed},
          {"provenance", provenance}};
}

// Empirical f-weighted distance between the stationary laws with and
// without the capacity limit, from binned stationary masses.
json empirical_distance(const Spec& s, const DriftCertificate& cert, std::uint64_t seed,
                        double& point, double& se) {
  const double capacity = s.capacity;
  const int bins = 50;
  std::vector<double> edges;
  for (int k = 0; k <= bins; ++k) edges.push_back(capacity * k / bins);
  const RewardFunction f = RewardFunction::certificate_f(cert);
  const StationaryHistogram finite = estimate_stationary_histogram(
      SimModel::mg1(s.lambda, *s.law, capacity), f, edges, s.reps, sub_seed(seed, 3));
  std::vector<double> pi(finite.cells(), 0.0);
  double tail = 0.0;
  double pi_se = 0.0;
  std::string source;
  const auto* expo = std::get_if<Exponential>(&s.law->family());
  if (expo) {
    // Exact stationary law: atom 1 - rho plus density rho (mu - lambda) e^{-(mu - lambda) x}.
    const double rho = cert.rho;
    const double decay = expo->rate - s.lambda;
    const Integrand dens = [&](double x) {
      const double v = cert.f(x) * rho * decay * std::exp(-decay * x);
      return std::isfinite(v) ? v : 0.0;
    };
    pi[0] = (1.0 - rho) * cert.f(0.0);
    for (int k = 0; k < bins; ++k) pi[k + 1] = integrate(dens, edges[k], edges[k + 1]).value;
    tail = integrate_to_infinity(dens, capacity).value;
    source = "exact exponential-service stationary law";
  } else {
    std::vector<double> wide = edges;
    wide.push_back(kInf);
    const StationaryHistogram infinite = estimate_stationary_histogram(
        SimModel::mg1(s.lambda, *s.law), f, wide, s.reps, sub_seed(seed, 4));
    for (int k = 0; k < finite.cells(); ++k) pi[k] = infinite.cell(k).point;
    tail = infinite.cell(infinite.cells() - 1).point;
    std::vector<double> signs(infinite.cells(), 0.0);
    for (int k = 0; k < finite.cells(); ++k) {
      signs[k] = pi[k] >= finite.cell(k).point ? 1.0 : -1.0;
    }
    signs.back() = 1.0;
    pi_se = infinite.combination(signs).std_error;
    source = "simulated infinite-capacity histogram";
  }
  std::vector<double> signs(finite.cells());
  for (int k = 0; k < finite.cells(); ++k) {
    signs[k] = pi[k] >= finite.cell(k).point ? -1.0 : 1.0;
  }
  const RegenerativeEstimate combo = finite.combination(signs);
  double total = tail;
  for (int k = 0; k < finite.cells(); ++k) total += std::abs(pi[k] - finite.cell(k).point);
  point = total;
  se = std::sqrt(combo.std_error * combo.std_error + pi_se * pi_se);
  return {{"value", point}, {"std_error", se}, {"bins", bins}, {"reference", source},
          {"provenance", "sum over bins of |pi(f 1_bin) - pi_L(f 1_bin)| + pi(f 1_{x > L})"}};
}

CliResult cmd_verify(const Spec& s) {
  if (!s.seed) {
    throw Error(ErrorCode::kInvalidArgument, "verify needs a seed (--seed or \"seed\")");
  }
  const std::uint64_t seed = *s.seed;
  Bounds b = compute_bounds(s);
  const DriftCertificate& cert = b.built.cert;
  json report;
  report["command"] = "verify";
  report["input"] = s.input;
  for (auto& [key, value] : b.report.items()) report[key] = value;

  const SimModel sim = s.is_map ? SimModel::from_map(*s.map, *s.law, cert.i0)
                                : SimModel::mg1(s.lambda, *s.law);
  const RewardFunction f = RewardFunction::certificate_f(cert);
  const RegenerativeEstimate pi_f = estimate_pi_g(sim, f, s.reps, sub_seed(seed, 1));
  json estimates;
  estimates["pi_f"] = estimate_json(pi_f, "regenerative ratio estimator");

  json checks = json::array();
  std::string first_failure;
  auto add_check = [&](json c, double margin) {
    const bool pass = margin >= 0.0;
    c["margin"] = margin;
    c["pass"] = pass;
    if (!pass && first_failure.empty()) {
      first_failure = c["check"].get<std::string>() + " at " + c["state"].dump() +
                      " with margin " + num(margin);
    }
    checks.push_back(std::move(c));
  };

  const GeneratorCheck gen = check_generator(
      cert, std::max(s.grid.back(), 10.0 * cert.law.mean()));
  add_check({{"check", "generator_inequality"},
             {"state", {{"x", gen.worst_x}, {"phase", gen.worst_phase}}},
             {"worst_excess", gen.worst_excess}},
            kDefaultTolerances.generator_check - gen.worst_excess);

  std::string csv = csv_header(s.is_map);
  std::uint64_t tag = 100;
  for (double x : s.grid) {
    for (int i = 0; i < cert.phases(); ++i) {
      const RegenerativeEstimate h =
          estimate_h(sim, f, {x, i}, s.reps, pi_f, sub_seed(seed, tag++));
      const double bound = evaluate_bound(b.main, x, i);
      add_check({{"check", "h_bound"},
                 {"state", {{"x", x}, {"phase", i}}},
                 {"bound", bound},
                 {"estimate", estimate_json(h, "hitting-time form, regenerative")}},
                bound - std::abs(h.point) - 3.0 * h.std_error);
      csv += num(x) + (s.is_map ? "," + std::to_string(i) : "") + "," + num(bound) + "," +
             num(h.point) + "," + num(h.std_error) + "\n";
    }
  }

  const RegenerativeEstimate atom = estimate_h_return_form(
      sim, f, {0.0, cert.i0}, s.reps, pi_f, sub_seed(seed, 2));
  add_check({{"check", "atom_zero"},
             {"state", {{"x", 0.0}, {"phase", cert.i0}}},
             {"estimate", estimate_json(atom, "return-cycle form, regenerative")}},
            3.0 * atom.std_error - std::abs(atom.point));

  if (s.is_map) {
    const ReturnWitness& w = *b.main.witness;
    for (int i = 0; i < cert.phases(); ++i) {
      const RegenerativeEstimate p =
          estimate_return_probability(sim, i, w.t, s.reps, sub_seed(seed, 1000 + i));
      add_check({{"check", "witness_return_probability"},
                 {"state", {{"x", 0.0}, {"phase", i}}},
                 {"xi", w.xi},
                 {"estimate", estimate_json(p, "fraction of paths in the atom at T")}},
                p.point + 3.0 * p.std_error - w.xi);
    }
    std::uint64_t otag = 2000;
    for (double x : s.grid) {
      for (int i = 0; i < cert.phases(); ++i) {
        const RegenerativeEstimate occ =
            estimate_occupation(sim, {x, i}, s.reps, sub_seed(seed, otag++));
        add_check({{"check", "small_set_occupation"},
                   {"state", {{"x", x}, {"phase", i}}},
                   {"ratio", w.ratio},
                   {"estimate", estimate_json(occ, "mean time at w = 0 before the atom")}},
                  w.ratio + 3.0 * occ.std_error - occ.point);
      }
    }
  }

  if (!s.is_map && std::isfinite(s.capacity)) {
    const DistanceBound d =
        wcl_distance_bound(WclModel{s.lambda, *s.law, s.capacity}, cert, s.tol);
    double point = 0.0, se = 0.0;
    json emp = empirical_distance(s, cert, seed, point, se);
    add_check({{"check", "wcl_distance"},
               {"state", {{"capacity", s.capacity}}},
               {"bound", d.value},
               {"estimate", emp}},
              d.value - point - 3.0 * se);
  }

  report["estimates"] = estimates;
  report["checks"] = checks;
  const bool pass = first_failure.empty();
  report["verdict"] = pass ? "pass" : "fail";
  CliResult out{pass ? kExitOk : kExitVerification, report.dump(2) + "\n", csv, ""};
  if (!pass) out.message = "verification failed: " + first_failure;
  return out;
}

}  // namespace

CliResult run_command(const std::string& command, const std::string& model_text,
                      const CliOptions& options) {
  try {
    const Spec spec = parse_spec(model_text, options);
    if (command == "bound") return cmd_bound(spec);
    if (command == "wcl-distance") return cmd_wcl_distance(spec);
    if (command == "verify") return cmd_verify(spec);
    return {kExitInput, "", "", "unknown command '" + command + "'"};
  } catch (const Error& e) {
    return {is_input_error(e.code()) ? kExitInput : kExitInfeasible, "", "", e.what()};
  } catch (const json::exception& e) {
    return {kExitInput, "", "", std::string("Parse: ") + e.what()};
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explicit bounds on Poisson-equation solutions for queue models"};
  app.require_subcommand(1);
  std::string model_path, out_path, csv_path;
  CliOptions options;
  std::uint64_t seed = 0, reps = 0;
  std::string grid, regime;
  double tol = 0.0;
  std::vector<CLI::App*> subs;
  for (const char* name : {"bound", "wcl-distance", "verify"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--model", model_path, "model file")->required();
    sub->add_option("--out", out_path, "report path (default stdout)");
    sub->add_option("--csv", csv_path, "curve CSV path");
    sub->add_option("--seed", seed, "simulation seed");
    sub->add_option("--reps", reps, "replications per estimate");
    sub->add_option("--grid", grid, "state grid a:b:step");
    sub->add_option("--tol", tol, "distance tolerance");
    sub->add_option("--regime", regime, "drift regime")
        ->check(CLI::IsMember({"light", "moderate", "polynomial"}));
    sub->add_flag("--auto", options.auto_search, "search drift parameters");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  CLI::App* chosen = nullptr;
  for (CLI::App* sub : subs) {
    if (sub->parsed()) chosen = sub;
  }
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->count("--reps")) options.reps = reps;
  if (chosen->count("--grid")) options.grid = grid;
  if (chosen->count("--tol")) options.tol = tol;
  if (chosen->count("--regime")) options.regime = regime;

  std::ifstream in(model_path, std::ios::binary);
  if (!in) {
    err << "Parse: cannot read model file " << model_path << "\n";
    return kExitInput;
  }
  std::stringstream text;
  text << in.rdbuf();
  const CliResult r = run_command(chosen->get_name(), text.str(), options);
  if (!r.report.empty()) {
    if (out_path.empty()) {
      out << r.report;
    } else {
      std::ofstream o(out_path, std::ios::binary);
      o << r.report;
    }
  }
  if (!csv_path.empty() && !r.csv.empty()) {
    std::ofstream c(csv_path, std::ios::binary);
    c << r.csv;
  }
  if (!r.message.empty()) err << r.message << "\n";
  return r.exit_code;
}

}  // namespace pbound
