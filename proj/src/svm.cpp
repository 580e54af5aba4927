#include "empathy/svm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "empathy/random.hpp"

namespace empathy {

double Kernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                          const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
  if (type == KernelType::Linear) return x.dot(z);
  return std::exp(-gamma * (x - z).squaredNorm());
}

std::string Kernel::name() const { return type == KernelType::Linear ? "linear" : "gaussian"; }

namespace {

Eigen::MatrixXd gaussian_from_dot(const Eigen::MatrixXd& dot, const Eigen::VectorXd& na,
                                  const Eigen::VectorXd& nb, double gamma) {
  Eigen::MatrixXd K(dot.rows(), dot.cols());
  for (Eigen::Index j = 0; j < dot.cols(); ++j)
    for (Eigen::Index i = 0; i < dot.rows(); ++i)
      K(i, j) = std::exp(-gamma * std::max(0.0, na(i) + nb(j) - 2.0 * dot(i, j)));
  return K;
}

void check_labels(std::span<const int> y) {
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw ValidationError("SVM labels must be +1 or -1");
  }
  if (!pos || !neg) throw ValidationError("SVM training needs at least one instance of each class");
}

void check_finite(const Eigen::MatrixXd& X) {
  if (!X.allFinite()) throw ValidationError("feature matrix contains non-finite values");
}

}  // namespace

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Kernel& kernel) {
  Eigen::MatrixXd dot = Eigen::MatrixXd::Zero(X.rows(), X.rows());
  dot.selfadjointView<Eigen::Lower>().rankUpdate(X);
  dot = dot.selfadjointView<Eigen::Lower>();
  if (kernel.type == KernelType::Linear) return dot;
  const Eigen::VectorXd n = dot.diagonal();
  return gaussian_from_dot(dot, n, n, kernel.gamma);
}

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Kernel& kernel) {
  Eigen::MatrixXd dot = A * B.transpose();
  if (kernel.type == KernelType::Linear) return dot;
  return gaussian_from_dot(dot, A.rowwise().squaredNorm(), B.rowwise().squaredNorm(), kernel.gamma);
}

double dual_objective(const Eigen::MatrixXd& K, std::span<const int> y, std::span<const double> alpha) {
  Eigen::VectorXd ay(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) ay(static_cast<Eigen::Index>(i)) = alpha[i] * y[i];
  return std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * ay.dot(K * ay);
}

double kkt_residual(const Eigen::MatrixXd& K, std::span<const int> y, std::span<const double> alpha,
                    double bias, double C) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd ay(n);
  for (Eigen::Index i = 0; i < n; ++i) ay(i) = alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  const Eigen::VectorXd f = K * ay;
  double worst = 0.0;
  const double bound_tol = 1e-12 * std::max(1.0, C);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double m = y[ui] * (f(i) + bias);
    const double a = alpha[ui];
    double v = 0.0;
    if (a <= bound_tol)
      v = std::max(0.0, 1.0 - m);
    else if (a >= C - bound_tol)
      v = std::max(0.0, m - 1.0);
    else
      v = std::abs(m - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

class SmoSolver {
 public:
  SmoSolver(const Eigen::MatrixXd& K, std::span<const int> y, const SmoConfig& c)
      : K_(K), y_(y), c_(c), n_(y.size()), alpha_(n_, 0.0), E_(n_), rng_(c.seed) {
    for (std::size_t i = 0; i < n_; ++i) E_[i] = -static_cast<double>(y_[i]);
  }

  SmoSolution run() {
    bool examine_all = true;
    int verifications = 0;
    while (steps_ < c_.max_steps) {
      std::size_t changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_ && steps_ < c_.max_steps; ++i) changed += examine(i);
      } else {
        for (std::size_t i = 0; i < n_ && steps_ < c_.max_steps; ++i)
          if (non_bound(i)) changed += examine(i);
      }
      if (examine_all)
        examine_all = false;
      else if (changed == 0)
        examine_all = true;
      if (changed == 0 && !examine_all) {
        // converged on the cached errors; confirm on freshly computed ones
        refresh_errors();
        if (!any_violation() || ++verifications > 5) break;
        examine_all = true;
      }
    }
    refresh_errors();
    SmoSolution s;
    s.alpha = alpha_;
    s.bias = b_;
    s.steps = steps_;
    s.kkt_residual = kkt_residual(K_, y_, alpha_, b_, c_.C);
    s.converged = s.kkt_residual <= c_.tol && steps_ < c_.max_steps;
    return s;
  }

 private:
  const Eigen::MatrixXd& K_;
  std::span<const int> y_;
  SmoConfig c_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> E_;  // f(x_i) - y_i
  double b_ = 0.0;
  std::size_t steps_ = 0;
  Rng rng_;

  bool non_bound(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < c_.C; }
  double k(std::size_t i, std::size_t j) const {
    return K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  bool violates(std::size_t i) const {
    const double r = E_[i] * y_[i];
    return (r < -c_.tol && alpha_[i] < c_.C) || (r > c_.tol && alpha_[i] > 0.0);
  }

  bool any_violation() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (violates(i)) return true;
    return false;
  }

  void refresh_errors() {
    Eigen::VectorXd ay(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) ay(static_cast<Eigen::Index>(i)) = alpha_[i] * y_[i];
    const Eigen::VectorXd f = K_ * ay;
    for (std::size_t i = 0; i < n_; ++i) E_[i] = f(static_cast<Eigen::Index>(i)) + b_ - y_[i];
  }

  std::size_t examine(std::size_t i2) {
    if (!violates(i2)) return 0;
    const double E2 = E_[i2];
    std::size_t best = n_;
    double best_gap = -1.0;
    std::size_t n_non_bound = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!non_bound(i)) continue;
      ++n_non_bound;
      const double gap = std::abs(E_[i] - E2);
      if (gap > best_gap) best_gap = gap, best = i;
    }
    if (n_non_bound > 1 && best < n_ && take_step(best, i2)) return 1;
    const std::size_t start = n_ > 0 ? uniform_index(rng_, n_) : 0;
    for (std::size_t m = 0; m < n_; ++m) {
      const std::size_t i1 = (start + m) % n_;
      if (non_bound(i1) && take_step(i1, i2)) return 1;
    }
    const std::size_t start2 = uniform_index(rng_, n_);
    for (std::size_t m = 0; m < n_; ++m) {
      const std::size_t i1 = (start2 + m) % n_;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double C = c_.C;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const int y1 = y_[i1], y2 = y_[i2];
    const double E1 = E_[i1], E2 = E_[i2];
    const double s = y1 * y2;
    double L, H;
    if (y1 != y2) {
      L = std::max(0.0, a2 - a1);
      H = std::min(C, C + a2 - a1);
    } else {
      L = std::max(0.0, a2 + a1 - C);
      H = std::min(C, a2 + a1);
    }
    if (H - L <= 0.0) return false;
    const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2n;
    if (eta > 0.0) {
      a2n = std::clamp(a2 + y2 * (E1 - E2) / eta, L, H);
    } else {
      // objective (to be minimised) at both ends of the feasible segment
      const double S1 = E1 - b_, S2 = E2 - b_;
      const double f1 = y1 * S1 - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * S2 - s * a1 * k12 - a2 * k22;
      const double L1 = a1 + s * (a2 - L), H1 = a1 + s * (a2 - H);
      const double Lobj = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12;
      const double Hobj = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12;
      if (Lobj < Hobj - c_.eps)
        a2n = L;
      else if (Lobj > Hobj + c_.eps)
        a2n = H;
      else
        a2n = a2;
    }
    if (std::abs(a2n - a2) < c_.eps * (a2n + a2 + c_.eps)) return false;
    double a1n = a1 + s * (a2 - a2n);
    if (a1n < 0.0) {
      a2n += s * a1n;
      a1n = 0.0;
    } else if (a1n > C) {
      a2n += s * (a1n - C);
      a1n = C;
    }
    a2n = std::clamp(a2n, 0.0, C);

    const double d1 = y1 * (a1n - a1), d2 = y2 * (a2n - a2);
    const double b1 = b_ - E1 - d1 * k11 - d2 * k12;
    const double b2 = b_ - E2 - d1 * k12 - d2 * k22;
    double bn;
    if (a1n > 0.0 && a1n < C)
      bn = b1;
    else if (a2n > 0.0 && a2n < C)
      bn = b2;
    else
      bn = 0.5 * (b1 + b2);

#ifndef NDEBUG
    const double before = n_ <= 200 ? dual_objective(K_, y_, alpha_) : 0.0;
#endif
    const double db = bn - b_;
    const auto c1 = K_.col(static_cast<Eigen::Index>(i1));
    const auto c2 = K_.col(static_cast<Eigen::Index>(i2));
    for (std::size_t i = 0; i < n_; ++i)
      E_[i] += d1 * c1(static_cast<Eigen::Index>(i)) + d2 * c2(static_cast<Eigen::Index>(i)) + db;
    alpha_[i1] = a1n;
    alpha_[i2] = a2n;
    b_ = bn;
    ++steps_;
#ifndef NDEBUG
    if (n_ <= 200) assert(dual_objective(K_, y_, alpha_) >= before - 1e-9 * std::max(1.0, std::abs(before)));
#endif
    return true;
  }
};

}  // namespace

SmoSolution smo_solve(const Eigen::MatrixXd& K, std::span<const int> y, const SmoConfig& config) {
  if (K.rows() != K.cols() || static_cast<std::size_t>(K.rows()) != y.size())
    throw ValidationError("Gram matrix does not match the label count");
  if (!(config.C > 0.0)) throw ValidationError("C must be positive");
  check_labels(y);
  return SmoSolver(K, y, config).run();
}

double instance_ua(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction/reference length mismatch");
  long tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1)
      (predicted[i] == 1 ? tp : fn)++;
    else
      (predicted[i] == 1 ? fp : tn)++;
  }
  if (tp + fn == 0 || tn + fp == 0) throw ValidationError("UA needs both classes in the reference");
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(tp + fn) +
                static_cast<double>(tn) / static_cast<double>(tn + fp));
}

namespace {

SvmModel model_from_solution(const Eigen::MatrixXd& Z, std::span<const int> y, const SmoSolution& s,
                             const TrainOptions& o) {
  SvmModel m;
  m.kernel = o.kernel;
  m.C = o.smo.C;
  m.bias = s.bias;
  m.kkt_residual = s.kkt_residual;
  m.converged = s.converged;
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd ay(n);
  for (Eigen::Index i = 0; i < n; ++i)
    ay(i) = s.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  if (o.kernel.type == KernelType::Linear) {
    m.weights = Z.transpose() * ay;
    return m;
  }
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (s.alpha[static_cast<std::size_t>(i)] > 0.0) sv.push_back(i);
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), Z.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = Z.row(sv[k]);
    m.coefficients(static_cast<Eigen::Index>(k)) = ay(sv[k]);
  }
  return m;
}

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, std::span<const std::size_t> columns) {
  if (columns.empty()) return X;
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= static_cast<std::size_t>(X.cols())) throw ValidationError("column index out of range");
    out.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

std::vector<std::string> column_names(const FeatureTable& t, std::span<const std::size_t> columns) {
  if (columns.empty()) return t.schema->names;
  std::vector<std::string> out;
  for (auto c : columns) out.push_back(t.schema->names[c]);
  return out;
}

Normalizer fit_normalizer(const Eigen::MatrixXd& X, const TrainOptions& options,
                          const std::vector<std::string>& names) {
  if (!options.normalize) return Normalizer::identity(static_cast<std::size_t>(X.cols()));
  Normalizer norm = Normalizer::fit(X);
  if (options.raw_prefixes.empty()) return norm;
  for (std::size_t j = 0; j < names.size() && j < norm.mean.size(); ++j)
    for (const auto& p : options.raw_prefixes)
      if (names[j].starts_with(p)) {
        norm.mean[j] = 0.0;
        norm.scale[j] = 1.0;
      }
  return norm;
}

SvmModel train_normalized(const Eigen::MatrixXd& X, std::span<const int> y, const TrainOptions& options,
                          const Normalizer& norm) {
  check_finite(X);
  check_labels(y);
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw ValidationError("feature rows do not match the label count");
  const Eigen::MatrixXd Z = norm.apply(X);
  const Eigen::MatrixXd K = gram_matrix(Z, options.kernel);
  const auto solution = smo_solve(K, y, options.smo);
  SvmModel m = model_from_solution(Z, y, solution, options);
  m.normalizer = norm;
  return m;
}

}  // namespace

SvmModel smo_train(const Eigen::MatrixXd& X, std::span<const int> y, const TrainOptions& options) {
  check_finite(X);
  return train_normalized(X, y, options, fit_normalizer(X, options, {}));
}

SvmModel smo_train(const FeatureTable& table, const TrainOptions& options,
                   std::span<const std::size_t> columns) {
  const auto y = binary_targets(table);
  const Eigen::MatrixXd X = take_columns(table.X, columns);
  check_finite(X);
  auto names = column_names(table, columns);
  SvmModel m = train_normalized(X, y, options, fit_normalizer(X, options, names));
  m.schema_id = table.schema->id;
  m.features = std::move(names);
  return m;
}

Eigen::VectorXd SvmModel::decision_values(const Eigen::MatrixXd& Z) const {
  if (kernel.type == KernelType::Linear) {
    if (Z.cols() != weights.size()) throw ValidationError("input dimension does not match the model");
    return (Z * weights).array() + bias;
  }
  if (Z.cols() != support_vectors.cols() && support_vectors.rows() > 0)
    throw ValidationError("input dimension does not match the model");
  if (support_vectors.rows() == 0) return Eigen::VectorXd::Constant(Z.rows(), bias);
  return (cross_kernel(Z, support_vectors, kernel) * coefficients).array() + bias;
}

std::vector<Decision> SvmModel::predict(const FeatureTable& table) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < table.cols(); ++j) index.emplace(table.schema->names[j], j);
  std::vector<std::size_t> cols;
  cols.reserve(features.size());
  for (const auto& f : features) {
    const auto it = index.find(f);
    if (it == index.end()) throw ValidationError("feature '" + f + "' required by the model is missing");
    cols.push_back(it->second);
  }
  const Eigen::MatrixXd Z = normalizer.apply(take_columns(table.X, cols));
  const Eigen::VectorXd f = decision_values(Z);
  std::vector<Decision> out;
  out.reserve(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const double v = f(static_cast<Eigen::Index>(i));
    out.push_back({table.ids[i], v > 0.0 ? Label::Empathy : Label::Neutral, v});
  }
  return out;
}

Decision SvmModel::predict(const std::string& id, std::span<const double> values) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t j = 0; j < values.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = values[j];
  const double v = decision_values(normalizer.apply(row))(0);
  return {id, v > 0.0 ? Label::Empathy : Label::Neutral, v};
}

namespace {
std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

std::string SvmModel::to_json() const {
  nlohmann::json j;
  j["format"] = "empathy-svm";
  j["version"] = 1;
  j["kernel"] = kernel.name();
  if (kernel.type == KernelType::Gaussian) j["gamma"] = kernel.gamma;
  j["C"] = C;
  j["bias"] = bias;
  j["schema_id"] = schema_id;
  j["features"] = features;
  j["normalizer"] = {{"mean", normalizer.mean}, {"scale", normalizer.scale}};
  j["kkt_residual"] = kkt_residual;
  j["converged"] = converged;
  if (kernel.type == KernelType::Linear) {
    j["weights"] = to_vec(weights);
  } else {
    j["coefficients"] = to_vec(coefficients);
    auto& sv = j["support_vectors"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
      sv.push_back(to_vec(support_vectors.row(i).transpose()));
  }
  return j.dump();
}

SvmModel SvmModel::from_json(const std::string& text) {
  SvmModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "empathy-svm") throw ValidationError("not an SVM model file");
    if (j.at("version").get<int>() != 1) throw ValidationError("unsupported model version");
    const std::string kernel = j.at("kernel");
    if (kernel == "linear") {
      m.kernel.type = KernelType::Linear;
    } else if (kernel == "gaussian") {
      m.kernel.type = KernelType::Gaussian;
      m.kernel.gamma = j.at("gamma");
    } else {
      throw ValidationError("unknown kernel '" + kernel + "'");
    }
    m.C = j.at("C");
    m.bias = j.at("bias");
    m.schema_id = j.at("schema_id");
    m.features = j.at("features").get<std::vector<std::string>>();
    m.normalizer.mean = j.at("normalizer").at("mean").get<std::vector<double>>();
    m.normalizer.scale = j.at("normalizer").at("scale").get<std::vector<double>>();
    m.kkt_residual = j.value("kkt_residual", 0.0);
    m.converged = j.value("converged", true);
    if (m.kernel.type == KernelType::Linear) {
      m.weights = from_vec(j.at("weights").get<std::vector<double>>());
    } else {
      m.coefficients = from_vec(j.at("coefficients").get<std::vector<double>>());
      const auto& sv = j.at("support_vectors");
      m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), static_cast<Eigen::Index>(m.features.size()));
      for (std::size_t i = 0; i < sv.size(); ++i) {
        const auto row = sv[i].get<std::vector<double>>();
        if (row.size() != m.features.size()) throw ValidationError("support vector has the wrong dimension");
        m.support_vectors.row(static_cast<Eigen::Index>(i)) = from_vec(row).transpose();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  return m;
}

void SvmModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << to_json() << '\n';
}

SvmModel SvmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<double> default_grid() { return {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  try {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const double lo = std::stod(text.substr(0, colon)), hi = std::stod(text.substr(colon + 1));
      if (!(lo > 0.0) || !(hi >= lo)) throw ValidationError("grid bounds must satisfy 0 < lo <= hi");
      const int e0 = static_cast<int>(std::lround(std::log10(lo)));
      const int e1 = static_cast<int>(std::lround(std::log10(hi)));
      for (int e = e0; e <= e1; ++e) out.push_back(std::pow(10.0, e));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse grid '" + text + "'");
  }
  if (out.empty()) throw ValidationError("empty grid '" + text + "'");
  std::sort(out.begin(), out.end());
  return out;
}

GridResult grid_tune(const FeatureTable& train, const FeatureTable& dev, const TrainOptions& base,
                     std::span<const double> Cs, std::span<const double> gammas,
                     std::span<const std::size_t> columns) {
  if (Cs.empty()) throw ValidationError("C grid is empty");
  const bool gaussian = base.kernel.type == KernelType::Gaussian;
  if (gaussian && gammas.empty()) throw ValidationError("G grid is empty");
  std::vector<double> Cs_sorted(Cs.begin(), Cs.end()), G_sorted(gammas.begin(), gammas.end());
  std::sort(Cs_sorted.begin(), Cs_sorted.end());
  std::sort(G_sorted.begin(), G_sorted.end());
  if (!gaussian) G_sorted = {0.0};

  const auto y = binary_targets(train);
  const auto y_dev = binary_targets(dev);
  check_labels(y);
  bool dev_pos = false, dev_neg = false;
  for (int v : y_dev) (v == 1 ? dev_pos : dev_neg) = true;
  if (!dev_pos || !dev_neg) throw ValidationError("dev set must contain both classes for tuning");

  const Eigen::MatrixXd X = take_columns(train.X, columns);
  const Eigen::MatrixXd Xd = take_columns(dev.X, columns);
  check_finite(X);
  check_finite(Xd);
  const Normalizer norm = fit_normalizer(X, base, column_names(train, columns));
  const Eigen::MatrixXd Z = norm.apply(X), Zd = norm.apply(Xd);

  GridResult result;
  bool have_best = false;
  std::vector<GridPoint> by_gamma;  // collected per gamma, reordered to C-major below
  for (double g : G_sorted) {
    Kernel kernel = base.kernel;
    if (gaussian) kernel.gamma = g;
    const Eigen::MatrixXd K = gram_matrix(Z, kernel);
    const Eigen::MatrixXd Kd = gaussian ? cross_kernel(Zd, Z, kernel) : Eigen::MatrixXd();
    for (double C : Cs_sorted) {
      SmoConfig smo = base.smo;
      smo.C = C;
      const auto s = smo_solve(K, y, smo);
      Eigen::VectorXd ay(static_cast<Eigen::Index>(y.size()));
      for (std::size_t i = 0; i < y.size(); ++i) ay(static_cast<Eigen::Index>(i)) = s.alpha[i] * y[i];
      const Eigen::VectorXd f = gaussian ? Eigen::VectorXd((Kd * ay).array() + s.bias)
                                         : Eigen::VectorXd((Zd * (Z.transpose() * ay)).array() + s.bias);
      std::vector<int> pred(y_dev.size());
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = f(static_cast<Eigen::Index>(i)) > 0.0 ? 1 : -1;
      by_gamma.push_back({C, gaussian ? g : 0.0, instance_ua(pred, y_dev)});
    }
  }
  for (std::size_t ci = 0; ci < Cs_sorted.size(); ++ci)
    for (std::size_t gi = 0; gi < G_sorted.size(); ++gi) {
      const GridPoint& p = by_gamma[gi * Cs_sorted.size() + ci];
      result.points.push_back(p);
      if (!have_best || p.score > result.best.score) {
        result.best = p;
        have_best = true;
      }
    }
  return result;
}

std::vector<Decision> majority_vote(const std::vector<std::vector<Decision>>& decisions) {
  if (decisions.empty()) throw ValidationError("majority vote needs at least one classifier");
  const std::size_t n = decisions.front().size();
  for (const auto& d : decisions)
    if (d.size() != n) throw ValidationError("classifiers disagree on the number of segments");
  std::vector<Decision> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int votes_e = 0, votes_n = 0;
    double sum_e = 0.0, sum_n = 0.0;
    for (const auto& d : decisions) {
      if (d[i].segment_id != decisions.front()[i].segment_id)
        throw ValidationError("segment id mismatch in majority vote: '" + d[i].segment_id + "' vs '" +
                              decisions.front()[i].segment_id + "'");
      if (d[i].label == Label::Empathy) {
        ++votes_e;
        sum_e += std::abs(d[i].margin);
      } else {
        ++votes_n;
        sum_n += std::abs(d[i].margin);
      }
    }
    const double mean_e = votes_e ? sum_e / votes_e : 0.0;
    const double mean_n = votes_n ? sum_n / votes_n : 0.0;
    const bool empathy = votes_e != votes_n ? votes_e > votes_n : mean_e > mean_n;
    out.push_back({decisions.front()[i].segment_id, empathy ? Label::Empathy : Label::Neutral,
                   empathy ? mean_e : -mean_n});
  }
  return out;
}

BaselineResult random_baseline(double p_positive, std::span<const int> truth,
                               std::span<const double> weights, std::uint64_t seed,
                               std::size_t trials) {
  if (!(p_positive >= 0.0 && p_positive <= 1.0)) throw ValidationError("prior must lie in [0, 1]");
  if (!weights.empty() && weights.size() != truth.size())
    throw ValidationError("weights must match the reference length");
  double pos_total = 0.0, neg_total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    (truth[i] == 1 ? pos_total : neg_total) += w;
  }
  if (!(pos_total > 0.0) || !(neg_total > 0.0))
    throw ValidationError("random baseline needs both classes in the reference");
  BaselineResult r;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    double tp = 0.0, tn = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool pos = uniform01(rng) < p_positive;
      const double w = weights.empty() ? 1.0 : weights[i];
      if (truth[i] == 1 && pos) tp += w;
      if (truth[i] != 1 && !pos) tn += w;
    }
    r.ua.push_back(0.5 * (tp / pos_total + tn / neg_total));
  }
  if (!r.ua.empty()) {
    r.mean = std::accumulate(r.ua.begin(), r.ua.end(), 0.0) / static_cast<double>(r.ua.size());
    double ss = 0.0;
    for (double v : r.ua) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(r.ua.size()));
  }
  return r;
}

}  // namespace empathy
