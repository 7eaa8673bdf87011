#include "eigengap/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigengap/parallel.hpp"
#include "eigengap/random.hpp"

namespace eigengap::netmodel {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::sbm: return "sbm";
    case ModelKind::dcsbm: return "dcsbm";
    case ModelKind::mm: return "mm";
    case ModelKind::dcmm: return "dcmm";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sbm") return ModelKind::sbm;
  if (s == "dcsbm") return ModelKind::dcsbm;
  if (s == "mm") return ModelKind::mm;
  if (s == "dcmm") return ModelKind::dcmm;
  throw SpecError("unknown model kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

CommunityMatrix::CommunityMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw SpecError("community matrix must be square and nonempty");
  for (Eigen::Index k = 0; k < entries_.rows(); ++k) {
    for (Eigen::Index l = 0; l < entries_.cols(); ++l) {
      const double q = entries_(k, l);
      if (!(q >= 0.0 && q <= 1.0)) throw SpecError("community probability outside [0,1]");
      if (q != entries_(l, k)) throw SpecError("community matrix is not symmetric");
    }
  }
}

Membership::Membership(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.cols() == 0) throw SpecError("membership needs K >= 1");
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    if ((rows_.row(i).array() < 0.0).any()) throw SpecError("negative membership entry in row " + std::to_string(i));
    if (std::abs(rows_.row(i).sum() - 1.0) > 1e-12)
      throw SpecError("membership row " + std::to_string(i) + " does not sum to 1");
  }
}

Membership Membership::from_labels(std::span<const std::size_t> labels, std::size_t K) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= K) throw SpecError("label out of range at node " + std::to_string(i));
    rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  }
  return Membership(std::move(rows));
}

bool Membership::is_pure(std::size_t i) const {
  const auto row = rows_.row(static_cast<Eigen::Index>(i));
  return (row.array() == 1.0).count() == 1;
}

bool Membership::all_pure() const {
  for (std::size_t i = 0; i < n(); ++i)
    if (!is_pure(i)) return false;
  return true;
}

std::optional<std::size_t> Membership::label(std::size_t i) const {
  if (!is_pure(i)) return std::nullopt;
  Eigen::Index k;
  rows_.row(static_cast<Eigen::Index>(i)).maxCoeff(&k);
  return static_cast<std::size_t>(k);
}

DegreeWeights::DegreeWeights(std::vector<double> values) : values_(std::move(values)) {
  for (double w : values_)
    if (!(w > 0.0) || !std::isfinite(w)) throw SpecError("degree weights must be positive and finite");
}

bool DegreeWeights::all_ones() const {
  return std::all_of(values_.begin(), values_.end(), [](double w) { return w == 1.0; });
}

void BlockModelSpec::validate() const {
  if (membership.n() == 0) throw SpecError("spec needs at least one node");
  if (membership.K() != Q.K()) throw SpecError("membership width does not match K");
  if (weights.size() != membership.n()) throw SpecError("weight vector length does not match n");
  if ((kind == ModelKind::sbm || kind == ModelKind::dcsbm) && !membership.all_pure())
    throw SpecError(std::string(to_string(kind)) + " requires pure membership");
  if ((kind == ModelKind::sbm || kind == ModelKind::mm) && !weights.all_ones())
    throw SpecError(std::string(to_string(kind)) + " requires unit degree weights");
}

// ---------------------------------------------------------------------------

namespace {

void check_probability(double p, std::size_t i, std::size_t j) {
  if (!(p >= 0.0 && p <= 1.0))
    throw SpecError("P(" + std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(p) +
                    " is outside [0,1]");
}

}  // namespace

EdgeProbabilityMatrix EdgeProbabilityMatrix::from_dense(Eigen::MatrixXd p) {
  if (p.rows() != p.cols()) throw SpecError("probability matrix must be square");
  const auto n = static_cast<std::size_t>(p.rows());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      check_probability(p(i, j), i, j);
      if (p(i, j) != p(j, i)) throw SpecError("probability matrix is not symmetric");
    }
  }
  EdgeProbabilityMatrix out;
  out.n_ = n;
  out.dense_ = std::move(p);
  return out;
}

double EdgeProbabilityMatrix::operator()(std::size_t i, std::size_t j) const {
  if (dense_.size() > 0) return dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  if (i > j) std::swap(i, j);
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  const double p = weights_(a) * weights_(b) * membership_.row(a).dot(projected_.row(b));
  return clip_ ? std::min(p, 1.0) : p;
}

Eigen::MatrixXd EdgeProbabilityMatrix::to_dense() const {
  if (dense_.size() > 0 || n_ == 0) return dense_;
  Eigen::MatrixXd out(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) out(i, j) = out(j, i) = (*this)(i, j);
  return out;
}

EdgeProbabilityMatrix build_probability_matrix(const BlockModelSpec& spec, const BuildOptions& options) {
  spec.validate();
  EdgeProbabilityMatrix out;
  out.n_ = spec.n();
  out.clip_ = options.clip_to_unit;
  out.weights_ = Eigen::Map<const Eigen::VectorXd>(spec.weights.values().data(),
                                                   static_cast<Eigen::Index>(spec.weights.size()));
  out.membership_ = spec.membership.rows();
  out.projected_ = out.membership_ * spec.Q.entries();  // row j = (Q pi_j)' since Q is symmetric

  const std::size_t n = out.n_;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      const double p = out.weights_(a) * out.weights_(b) * out.membership_.row(a).dot(out.projected_.row(b));
      if (!options.clip_to_unit || p < 1.0) check_probability(p, i, j);
    }
  }
  if (n <= options.dense_limit) {
    out.dense_ = out.to_dense();
    out.weights_.resize(0);
    out.membership_.resize(0, 0);
    out.projected_.resize(0, 0);
  }
  return out;
}

SymmetricGraph sample_adjacency(const EdgeProbabilityMatrix& p, std::uint64_t seed, unsigned workers) {
  const std::size_t n = p.n();
  std::vector<std::vector<std::uint32_t>> upper(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    auto& row = upper[i];
    for (std::size_t j = i + 1; j < n; ++j)
      if (uniform01(rng) < p(i, j)) row.push_back(static_cast<std::uint32_t>(j));
  });
  return SymmetricGraph::from_upper_rows(std::move(upper));
}

// ---------------------------------------------------------------------------

CommunityMatrix make_q_planted(std::size_t K, double within, double between) {
  if (K == 0) throw SpecError("K must be positive");
  if (!(within >= 0.0 && within <= 1.0 && between >= 0.0 && between <= 1.0))
    throw SpecError("planted probabilities must lie in [0,1]");
  if (between > within) throw SpecError("planted partition needs between <= within");
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K), between);
  q.diagonal().setConstant(within);
  return CommunityMatrix(std::move(q));
}

CommunityMatrix make_q_decay(std::size_t K, double scale) {
  if (K == 0) throw SpecError("K must be positive");
  if (!(scale > 0.0)) throw SpecError("decay scale must be positive");
  if (scale > 1.0) throw SpecError("decay scale pushes entries above 1");
  const auto k = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd q(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      q(a, b) = a == b ? scale * static_cast<double>(k - a) / static_cast<double>(k)
                       : scale * std::pow(0.1, static_cast<double>(std::abs(a - b)));
    }
  }
  return CommunityMatrix(std::move(q));
}

double sparse_edge_scale(std::size_t n) { return std::pow(static_cast<double>(n), -5.0 / 9.0); }

DegreeWeights sample_degree_weights(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw SpecError("need n >= 1 degree weights");
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& v : w) {
    const double u = uniform01(rng);
    if (u < 0.8) {
      v = 0.8 + 0.4 * uniform01(rng);
    } else if (u < 0.9) {
      v = 9.0 / 11.0;
    } else {
      v = 13.0 / 11.0;
    }
  }
  return DegreeWeights(std::move(w));
}

DegreeWeights renormalize_per_community(const DegreeWeights& weights, const Membership& membership) {
  if (weights.size() != membership.n()) throw SpecError("weight vector length does not match n");
  std::vector<double> sum(membership.K(), 0.0);
  std::vector<double> count(membership.K(), 0.0);
  std::vector<std::size_t> label(membership.n());
  for (std::size_t i = 0; i < membership.n(); ++i) {
    const auto g = membership.label(i);
    if (!g) throw SpecError("renormalization requires pure membership");
    label[i] = *g;
    sum[*g] += weights[i];
    count[*g] += 1.0;
  }
  std::vector<double> out(weights.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= count[label[i]] / sum[label[i]];
  return DegreeWeights(std::move(out));
}

Membership make_membership_pure(std::size_t n, std::size_t K) {
  if (K == 0 || n == 0) throw SpecError("need n >= 1 and K >= 1");
  if (n % K != 0)
    throw SpecError("K = " + std::to_string(K) + " does not divide n = " + std::to_string(n));
  const std::size_t size = n / K;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i / size;
  return Membership::from_labels(labels, K);
}

Membership make_membership_dcmm(std::size_t n, std::size_t K) {
  if (K < 2) throw SpecError("mixed membership needs K >= 2");
  const double target = static_cast<double>(n) * (1.0 / static_cast<double>(K) - 0.03);
  if (target < 1.0) throw SpecError("n(1/K - 0.03) must be at least 1");
  const auto pure = static_cast<std::size_t>(std::llround(target));
  if (pure * K > n) throw SpecError("pure-node allocation exceeds n");
  const std::size_t mixed = n - pure * K;
  const std::size_t share = mixed / 3;

  const auto k = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < k; ++c)
    for (std::size_t m = 0; m < pure; ++m) rows(r++, c) = 1.0;
  for (std::size_t m = 0; m < share; ++m, ++r) {
    rows(r, 0) = 0.2;
    rows(r, 1) = 0.8;
  }
  for (std::size_t m = 0; m < share; ++m, ++r) {
    rows(r, 0) = 0.8;
    rows(r, 1) = 0.2;
  }
  for (; r < static_cast<Eigen::Index>(n); ++r) rows.row(r).setConstant(1.0 / static_cast<double>(K));
  return Membership(std::move(rows));
}

// ---------------------------------------------------------------------------

nlohmann::json spec_to_json(const BlockModelSpec& spec, std::uint64_t seed) {
  const auto flatten = [](const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
  };
  return {{"kind", to_string(spec.kind)},
          {"K", spec.K()},
          {"n", spec.n()},
          {"Q", flatten(spec.Q.entries())},
          {"membership", flatten(spec.membership.rows())},
          {"omega", spec.weights.values()},
          {"seed", seed}};
}

BlockModelSpec spec_from_json(const nlohmann::json& doc) {
  try {
    const auto K = doc.at("K").get<std::size_t>();
    const auto n = doc.at("n").get<std::size_t>();
    const auto q = doc.at("Q").get<std::vector<double>>();
    const auto pi = doc.at("membership").get<std::vector<double>>();
    if (q.size() != K * K || pi.size() != n * K) throw SpecError("spec JSON arrays have wrong length");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto k = static_cast<Eigen::Index>(K);
    BlockModelSpec spec{parse_model_kind(doc.at("kind").get<std::string>()),
                        CommunityMatrix(Eigen::Map<const RowMajor>(q.data(), k, k)),
                        Membership(Eigen::Map<const RowMajor>(pi.data(), static_cast<Eigen::Index>(n), k)),
                        DegreeWeights(doc.at("omega").get<std::vector<double>>())};
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed spec JSON: ") + e.what());
  }
}

}  // namespace eigengap::netmodel
