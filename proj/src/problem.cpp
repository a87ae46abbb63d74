#include "epsode/problem.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "epsode/error.hpp"
#include "epsode/losses.hpp"

namespace epsode {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void spec_fail(const std::string& msg) { fail(ErrorCode::spec_error, msg); }

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) spec_fail(where + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

double parse_number(std::string field, const std::string& where) {
  const auto first = field.find_first_not_of(" \t");
  const auto last = field.find_last_not_of(" \t");
  field = first == std::string::npos ? "" : field.substr(first, last - first + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (field.empty() || used != field.size() || !std::isfinite(v)) {
    spec_fail(where + ": '" + field + "' is not a finite number");
  }
  return v;
}

struct Context {
  fs::path base;

  fs::path resolve(const std::string& name) const {
    const fs::path p(name);
    return p.is_absolute() ? p : base / p;
  }

  Matrix matrix(const json& node, const std::string& what) const {
    if (node.is_string()) return read_csv_matrix(resolve(node.get<std::string>()));
    if (!node.is_array() || node.empty()) spec_fail(what + ": expected a file name or a nested array");
    if (!node.front().is_array()) {
      Matrix m(static_cast<Index>(node.size()), 1);
      for (std::size_t i = 0; i < node.size(); ++i) m(static_cast<Index>(i), 0) = number(node[i], what);
      return m;
    }
    const std::size_t cols = node.front().size();
    Matrix m(static_cast<Index>(node.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (!node[i].is_array() || node[i].size() != cols) spec_fail(what + ": ragged rows");
      for (std::size_t j = 0; j < cols; ++j) {
        m(static_cast<Index>(i), static_cast<Index>(j)) = number(node[i][j], what);
      }
    }
    return m;
  }

  Vector vector(const json& node, const std::string& what) const {
    if (node.is_string()) return read_csv_vector(resolve(node.get<std::string>()));
    if (!node.is_array()) spec_fail(what + ": expected a file name or an array");
    Vector v(static_cast<Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Index>(i)) = number(node[i], what);
    return v;
  }

  static double number(const json& node, const std::string& what) {
    if (!node.is_number()) spec_fail(what + ": expected a number");
    return node.get<double>();
  }
};

void check_keys(const json& node, const std::string& what, std::set<std::string> allowed) {
  if (!node.is_object()) spec_fail(what + " must be an object");
  for (const auto& [key, value] : node.items()) {
    if (!allowed.contains(key)) spec_fail(what + ": unknown key '" + key + "'");
  }
}

const json& require(const json& node, const std::string& key, const std::string& what) {
  if (!node.contains(key)) spec_fail(what + ": missing '" + key + "'");
  return node.at(key);
}

std::string string_field(const json& node, const std::string& key, const std::string& what) {
  const json& v = require(node, key, what);
  if (!v.is_string()) spec_fail(what + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

double number_field(const json& node, const std::string& key, double fallback, const std::string& what) {
  if (!node.contains(key)) return fallback;
  return Context::number(node.at(key), what + "." + key);
}

std::shared_ptr<const LossModel> parse_loss(const json& node, const Context& ctx) {
  const std::string what = "loss";
  const std::string type = string_field(node, "type", what);
  if (type == "quadratic") {
    check_keys(node, what, {"type", "center", "hessian", "design", "response"});
    if (node.contains("design") || node.contains("response")) {
      return std::make_shared<QuadraticLoss>(QuadraticLoss::least_squares(
          ctx.matrix(require(node, "design", what), "loss.design"),
          ctx.vector(require(node, "response", what), "loss.response")));
    }
    Vector center = ctx.vector(require(node, "center", what), "loss.center");
    if (node.contains("hessian")) {
      return std::make_shared<QuadraticLoss>(
          QuadraticLoss::centered(ctx.matrix(node.at("hessian"), "loss.hessian"), std::move(center)));
    }
    return std::make_shared<QuadraticLoss>(QuadraticLoss::centered(std::move(center)));
  }
  if (type == "glm") {
    check_keys(node, what, {"type", "family", "design", "response", "sigma"});
    const std::string family = string_field(node, "family", what);
    GlmFamily f;
    if (family == "normal" || family == "gaussian") {
      f = GlmFamily::normal;
    } else if (family == "logistic" || family == "binomial") {
      f = GlmFamily::logistic;
    } else if (family == "poisson") {
      f = GlmFamily::poisson;
    } else {
      spec_fail("loss.family: unknown family '" + family + "'");
    }
    return std::make_shared<GlmLoss>(ctx.matrix(require(node, "design", what), "loss.design"),
                                     ctx.vector(require(node, "response", what), "loss.response"),
                                     f, number_field(node, "sigma", 1.0, what));
  }
  if (type == "quasi") {
    check_keys(node, what, {"type", "link", "variance", "design", "response", "sigma"});
    return std::make_shared<QuasiLoss>(
        ctx.matrix(require(node, "design", what), "loss.design"),
        ctx.vector(require(node, "response", what), "loss.response"),
        Link::by_name(string_field(node, "link", what)),
        variance_by_name(string_field(node, "variance", what)), number_field(node, "sigma", 1.0, what));
  }
  if (type == "ggm") {
    check_keys(node, what, {"type", "covariance", "sample_size"});
    return std::make_shared<GgmLoss>(ctx.matrix(require(node, "covariance", what), "loss.covariance"),
                                     number_field(node, "sample_size", 1.0, what));
  }
  if (type == "logconcave") {
    check_keys(node, what, {"type", "samples", "points", "frequencies", "observations"});
    if (node.contains("samples")) {
      const Vector x = ctx.vector(node.at("samples"), "loss.samples");
      return std::make_shared<LogConcaveLoss>(
          LogConcaveLoss::from_sample(std::vector<double>(x.data(), x.data() + x.size())));
    }
    return std::make_shared<LogConcaveLoss>(
        ctx.vector(require(node, "points", what), "loss.points"),
        ctx.vector(require(node, "frequencies", what), "loss.frequencies"),
        number_field(node, "observations", 1.0, what));
  }
  spec_fail("loss.type: unknown loss '" + type + "'");
}

Vector node_degrees(Index p, const std::vector<GraphEdge>& edges) {
  Vector deg = Vector::Zero(p);
  for (const auto& e : edges) {
    if (e.i >= 0 && e.i < p) deg(e.i) += 1.0;
    if (e.j >= 0 && e.j < p) deg(e.j) += 1.0;
  }
  return deg;
}

ConstraintSystem parse_builder(const json& node, Index size, const LossModel& loss,
                               const Context& ctx, const std::string& what) {
  const std::string type = string_field(node, "type", what);
  static const std::set<std::string> placement = {"type", "offset", "size", "weight"};
  auto keys = [&](std::initializer_list<std::string> extra) {
    std::set<std::string> allowed = placement;
    allowed.insert(extra);
    check_keys(node, what, allowed);
  };
  if (type == "lasso") {
    keys({});
    return lasso(size);
  }
  if (type == "fused_lasso") {
    keys({});
    return fused_lasso(size);
  }
  if (type == "trend_filter") {
    keys({"order"});
    const double order = number_field(node, "order", 1.0, what);
    if (order != std::floor(order) || order < 0) spec_fail(what + ".order must be a nonnegative integer");
    return trend_filter(size, static_cast<int>(order));
  }
  if (type == "isotone") {
    keys({"direction"});
    const std::string dir = node.contains("direction") ? string_field(node, "direction", what) : "nondecreasing";
    if (dir != "nondecreasing" && dir != "nonincreasing") spec_fail(what + ".direction: unknown direction '" + dir + "'");
    return isotone(size, dir == "nondecreasing" ? Monotone::nondecreasing : Monotone::nonincreasing);
  }
  if (type == "shape") {
    keys({"kind", "grid"});
    const std::string kind = string_field(node, "kind", what);
    if (kind != "convex" && kind != "concave") spec_fail(what + ".kind: unknown shape '" + kind + "'");
    std::optional<Vector> grid;
    if (node.contains("grid")) {
      const json& g = node.at("grid");
      if (g.is_string() && g.get<std::string>() == "support") {
        const auto* lc = dynamic_cast<const LogConcaveLoss*>(&loss);
        if (!lc) spec_fail(what + ".grid: 'support' needs a logconcave loss");
        grid = lc->support();
      } else {
        grid = ctx.vector(g, what + ".grid");
      }
    }
    return shape(size, kind == "convex" ? Shape::convex : Shape::concave, grid);
  }
  if (type == "nonnegative") {
    keys({});
    return nonnegative(size);
  }
  if (type == "graph_guided") {
    keys({"edges", "ratio", "degrees"});
    const Matrix e = ctx.matrix(require(node, "edges", what), what + ".edges");
    if (e.rows() > 0 && e.cols() != 3) spec_fail(what + ".edges: expected columns i, j, correlation");
    std::vector<GraphEdge> edges;
    for (Index k = 0; k < e.rows(); ++k) {
      if (e(k, 0) != std::floor(e(k, 0)) || e(k, 1) != std::floor(e(k, 1))) {
        spec_fail(what + ".edges: node indices must be integers");
      }
      edges.push_back({static_cast<Index>(e(k, 0)), static_cast<Index>(e(k, 1)), e(k, 2)});
    }
    const Vector deg = node.contains("degrees") ? ctx.vector(node.at("degrees"), what + ".degrees")
                                                : node_degrees(size, edges);
    return graph_guided(size, edges, deg, number_field(node, "ratio", 1.0, what));
  }
  if (type == "ggm_offdiagonal") {
    keys({});
    const auto* g = dynamic_cast<const GgmLoss*>(&loss);
    if (!g) spec_fail(what + ": ggm_offdiagonal needs a ggm loss");
    if (size != g->dim()) spec_fail(what + ": ggm_offdiagonal must cover all parameters");
    return ggm_offdiagonal(g->nodes());
  }
  if (type == "explicit") {
    keys({"V", "d", "W", "e"});
    Matrix v(0, size), w(0, size);
    Vector d(0), e(0);
    if (node.contains("V")) {
      v = ctx.matrix(node.at("V"), what + ".V");
      d = node.contains("d") ? ctx.vector(node.at("d"), what + ".d") : Vector::Zero(v.rows());
    }
    if (node.contains("W")) {
      w = ctx.matrix(node.at("W"), what + ".W");
      e = node.contains("e") ? ctx.vector(node.at("e"), what + ".e") : Vector::Zero(w.rows());
    }
    if ((v.rows() && v.cols() != size) || (w.rows() && w.cols() != size)) {
      std::ostringstream msg;
      msg << what << ": matrices must have " << size << " columns";
      spec_fail(msg.str());
    }
    if (v.rows() == 0) v.resize(0, size);
    if (w.rows() == 0) w.resize(0, size);
    return ConstraintSystem(v, d, w, e);
  }
  spec_fail(what + ".type: unknown constraint builder '" + type + "'");
}

ConstraintSystem parse_constraints(const json& node, const LossModel& loss, const Context& ctx) {
  const Index p = loss.dim();
  if (!node.is_array()) spec_fail("constraints must be an array");
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const std::string what = "constraints[" + std::to_string(k) + "]";
    const json& item = node[k];
    if (!item.is_object()) spec_fail(what + " must be an object");
    const double offset = number_field(item, "offset", 0.0, what);
    const double size = number_field(item, "size", static_cast<double>(p) - offset, what);
    if (offset != std::floor(offset) || size != std::floor(size) || offset < 0 || size < 1 ||
        offset + size > static_cast<double>(p)) {
      spec_fail(what + ": offset/size out of range");
    }
    Block b;
    b.offset = static_cast<Index>(offset);
    b.weight = number_field(item, "weight", 1.0, what);
    b.system = parse_builder(item, static_cast<Index>(size), loss, ctx, what);
    blocks.push_back(std::move(b));
  }
  return concat(blocks, p);
}

void parse_options(const json& node, ProblemSpec& spec) {
  check_keys(node, "options", {"direction", "mode", "rel_tol", "abs_tol", "event_tol", "rho_max",
                               "samples", "beta_bound"});
  auto& o = spec.options;
  if (node.contains("direction")) {
    const std::string d = string_field(node, "direction", "options");
    if (d == "forward") {
      o.direction = Direction::forward;
    } else if (d == "backward") {
      o.direction = Direction::backward;
    } else {
      spec_fail("options.direction: unknown direction '" + d + "'");
    }
  }
  if (node.contains("mode")) {
    const std::string m = string_field(node, "mode", "options");
    if (m == "direct") {
      o.mode = OdeMode::direct;
    } else if (m == "nullspace") {
      o.mode = OdeMode::nullspace;
    } else if (m == "tableau") {
      o.mode = OdeMode::tableau;
    } else {
      spec_fail("options.mode: unknown mode '" + m + "'");
    }
  }
  o.ode.rel_tol = number_field(node, "rel_tol", o.ode.rel_tol, "options");
  o.ode.abs_tol = number_field(node, "abs_tol", o.ode.abs_tol, "options");
  o.ode.event_tol = number_field(node, "event_tol", o.ode.event_tol, "options");
  o.rho_max = number_field(node, "rho_max", o.rho_max, "options");
  o.beta_bound = number_field(node, "beta_bound", o.beta_bound, "options");
  const double samples = number_field(node, "samples", 20.0, "options");
  if (!(o.ode.rel_tol > 0) || !(o.ode.abs_tol > 0) || !(o.ode.event_tol > 0)) {
    spec_fail("options: tolerances must be positive");
  }
  if (!(o.rho_max > 0)) spec_fail("options.rho_max must be positive");
  if (!(o.beta_bound > 0)) spec_fail("options.beta_bound must be positive");
  if (samples != std::floor(samples) || samples < 20 || samples > 1e6) {
    spec_fail("options.samples must be an integer of at least 20");
  }
  spec.sample_intervals = static_cast<int>(samples);
}

}  // namespace

Matrix read_csv_matrix(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::io_error, "cannot read " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = file.string() + ":" + std::to_string(line_no);
    std::vector<double> row;
    for (const auto& f : split_csv_line(line, where)) row.push_back(parse_number(f, where));
    if (!rows.empty() && row.size() != rows.front().size()) {
      spec_fail(where + ": expected " + std::to_string(rows.front().size()) + " fields");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) spec_fail(file.string() + ": no data");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Vector read_csv_vector(const fs::path& file) {
  const Matrix m = read_csv_matrix(file);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  spec_fail(file.string() + ": expected a single row or column");
}

ProblemSpec parse_problem(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    spec_fail(std::string("malformed JSON: ") + e.what());
  }
  check_keys(root, "problem", {"loss", "constraints", "options", "dimension"});
  const Context ctx{base_dir};
  ProblemSpec spec;
  spec.loss = parse_loss(require(root, "loss", "problem"), ctx);
  if (root.contains("dimension")) {
    const double p = Context::number(root.at("dimension"), "dimension");
    if (p != static_cast<double>(spec.loss->dim())) {
      std::ostringstream msg;
      msg << "dimension is declared as " << p << " but the loss has " << spec.loss->dim()
          << " parameters";
      spec_fail(msg.str());
    }
  }
  spec.constraints = root.contains("constraints")
                         ? parse_constraints(root.at("constraints"), *spec.loss, ctx)
                         : ConstraintSystem(spec.loss->dim());
  if (root.contains("options")) parse_options(root.at("options"), spec);
  return spec;
}

ProblemSpec load_problem(const fs::path& spec_file) {
  std::ifstream in(spec_file);
  if (!in) fail(ErrorCode::io_error, "cannot read " + spec_file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), spec_file.parent_path());
}

}  // namespace epsode
