#pragma once
/**
 * @file model.hpp
 * @brief Model specifications for compact spaces of homogeneous type.
 *
 * Two kinds of model are supported: self-similar sets given by an iterated
 * function system of contractive similitudes on R^d together with
 * probability weights, and finite point clouds carrying a probability mass
 * function. Both are normalized so that diam(K) = 1.
 */

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "augtree/errors.hpp"

namespace augtree {

using Point = Eigen::VectorXd;
using Json = nlohmann::json;

/// x -> ratio * orthogonal * x + offset
struct Similitude {
  double ratio = 0.5;
  Eigen::MatrixXd orthogonal;
  Point offset;

  [[nodiscard]] Point apply(const Point& x) const { return ratio * (orthogonal * x) + offset; }

  /// Linear part (ratio * orthogonal).
  [[nodiscard]] Eigen::MatrixXd linear() const { return ratio * orthogonal; }

  /// The unique fixed point, solving (I - ratio*orthogonal) x = offset.
  [[nodiscard]] Point fixed_point() const {
    const auto d = offset.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) - linear();
    return a.partialPivLu().solve(offset);
  }

  bool operator==(const Similitude& other) const {
    return ratio == other.ratio && orthogonal == other.orthogonal && offset == other.offset;
  }
};

enum class ModelKind { ifs, pointcloud };

struct ModelSpec {
  ModelKind kind = ModelKind::ifs;
  std::string name;

  // ifs
  std::vector<Similitude> maps;
  std::vector<double> weights;
  int ambient_dim = 1;

  // pointcloud
  std::vector<Point> points;
  std::vector<double> masses;
  double c_rho = 1.0;

  /// Horizontal-edge threshold: cells at level m are joined when their
  /// distance is at most gamma * r0^m.
  double gamma = 0.25;

  /// Smallest contraction ratio (IFS only).
  [[nodiscard]] double min_ratio() const {
    double r = 1.0;
    for (const auto& s : maps) r = std::min(r, s.ratio);
    return r;
  }

  [[nodiscard]] bool uniform_ratio() const {
    for (const auto& s : maps)
      if (s.ratio != maps.front().ratio) return false;
    return !maps.empty();
  }

  void validate() const {
    require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
    if (kind == ModelKind::ifs) {
      require(!maps.empty(), "IFS model needs at least one map");
      require(ambient_dim >= 1, "ambient_dim must be >= 1");
      require(weights.size() == maps.size(), "IFS model needs one weight per map");
      double total = 0.0;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        const auto& s = maps[i];
        require(s.ratio > 0.0 && s.ratio < 1.0, "map " + std::to_string(i) + ": ratio must lie in (0,1)");
        require(s.orthogonal.rows() == ambient_dim && s.orthogonal.cols() == ambient_dim,
                "map " + std::to_string(i) + ": matrix must be ambient_dim x ambient_dim");
        require(s.offset.size() == ambient_dim, "map " + std::to_string(i) + ": offset has wrong dimension");
        const Eigen::MatrixXd gram = s.orthogonal.transpose() * s.orthogonal;
        require(gram.isApprox(Eigen::MatrixXd::Identity(ambient_dim, ambient_dim), 1e-9),
                "map " + std::to_string(i) + ": matrix must be orthogonal");
        require(weights[i] > 0.0, "IFS weights must be positive");
        total += weights[i];
      }
      require(std::abs(total - 1.0) <= 1e-12, "IFS weights must sum to 1");
    } else {
      require(!points.empty(), "point cloud must be nonempty");
      require(masses.size() == points.size(), "point cloud needs one mass per point");
      require(c_rho >= 1.0, "c_rho must be >= 1");
      double total = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        require(points[i].size() == points.front().size(), "point cloud: inconsistent dimensions");
        require(masses[i] >= 0.0, "point cloud masses must be nonnegative");
        total += masses[i];
      }
      require(std::abs(total - 1.0) <= 1e-12, "point cloud masses must sum to 1");
    }
  }

  bool operator==(const ModelSpec& o) const {
    if (kind != o.kind || gamma != o.gamma) return false;
    if (kind == ModelKind::ifs) return maps == o.maps && weights == o.weights && ambient_dim == o.ambient_dim;
    return points == o.points && masses == o.masses && c_rho == o.c_rho;
  }
};

namespace detail {

inline Similitude similitude_1d(double ratio, double sign, double offset) {
  Similitude s;
  s.ratio = ratio;
  s.orthogonal = Eigen::MatrixXd::Constant(1, 1, sign);
  s.offset = Point::Constant(1, offset);
  return s;
}

inline double parse_param(std::string_view text, std::string_view key) {
  const auto pos = text.find(std::string(key) + "=");
  require(pos != std::string_view::npos, "builtin model: missing parameter " + std::string(key));
  const std::string value(text.substr(pos + key.size() + 1));
  // accepts a decimal or a fraction such as 1/3
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ValidationError("builtin model: bad value for " + std::string(key));
    }
    require(used == s.size(), "builtin model: bad value for " + std::string(key));
    return v;
  };
  const auto slash = value.find('/');
  const double v = slash == std::string::npos ? number(value) : number(value.substr(0, slash)) / number(value.substr(slash + 1));
  return v;
}

}  // namespace detail

/// S1(x) = x/2, S2(x) = (x+1)/2 with weights (p, 1-p).
inline ModelSpec interval_model(double p = 0.5) {
  ModelSpec m;
  m.kind = ModelKind::ifs;
  m.name = "interval";
  m.ambient_dim = 1;
  m.maps = {detail::similitude_1d(0.5, 1.0, 0.0), detail::similitude_1d(0.5, 1.0, 0.5)};
  m.weights = {p, 1.0 - p};
  m.gamma = 0.25;
  return m;
}

/// S1(x) = x/2, S2(x) = 1 - x/2 with weights (p, 1-p).
inline ModelSpec rotated_interval_model(double p) {
  require(p > 0.0 && p < 1.0, "rotated interval: p must lie in (0,1)");
  ModelSpec m;
  m.kind = ModelKind::ifs;
  m.name = "rotated-interval";
  m.ambient_dim = 1;
  m.maps = {detail::similitude_1d(0.5, 1.0, 0.0), detail::similitude_1d(0.5, -1.0, 1.0)};
  m.weights = {p, 1.0 - p};
  m.gamma = 0.25;
  return m;
}

/// Sierpinski gasket on the unit equilateral triangle with uniform weights.
inline ModelSpec gasket_model() {
  ModelSpec m;
  m.kind = ModelKind::ifs;
  m.name = "gasket";
  m.ambient_dim = 2;
  const double h = std::sqrt(3.0) / 2.0;
  const std::vector<Point> corners = {Point{{0.0, 0.0}}, Point{{1.0, 0.0}}, Point{{0.5, h}}};
  for (const auto& c : corners) {
    Similitude s;
    s.ratio = 0.5;
    s.orthogonal = Eigen::MatrixXd::Identity(2, 2);
    s.offset = 0.5 * c;
    m.maps.push_back(s);
  }
  m.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  m.gamma = 0.25;
  return m;
}

/// Resolves "interval", "rotated-interval:p=P", "gasket" (with or without a
/// "builtin:" prefix).
inline ModelSpec builtin_model(std::string_view name) {
  if (name.starts_with("builtin:")) name.remove_prefix(8);
  if (name == "interval") return interval_model();
  if (name == "gasket") return gasket_model();
  if (name.starts_with("rotated-interval")) {
    const double p = name.find("p=") == std::string_view::npos ? 0.5 : detail::parse_param(name, "p");
    return rotated_interval_model(p);
  }
  throw ValidationError("unknown builtin model: " + std::string(name));
}

inline Json to_json(const ModelSpec& m) {
  Json j;
  j["gamma"] = m.gamma;
  if (!m.name.empty()) j["name"] = m.name;
  if (m.kind == ModelKind::ifs) {
    j["kind"] = "ifs";
    j["ambient_dim"] = m.ambient_dim;
    Json maps = Json::array();
    for (const auto& s : m.maps) {
      Json mat = Json::array();
      for (Eigen::Index r = 0; r < s.orthogonal.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < s.orthogonal.cols(); ++c) row.push_back(s.orthogonal(r, c));
        mat.push_back(row);
      }
      Json off = Json::array();
      for (Eigen::Index i = 0; i < s.offset.size(); ++i) off.push_back(s.offset(i));
      maps.push_back({{"ratio", s.ratio}, {"matrix", mat}, {"offset", off}});
    }
    j["maps"] = maps;
    j["weights"] = m.weights;
  } else {
    j["kind"] = "pointcloud";
    Json pts = Json::array();
    for (const auto& p : m.points) pts.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    j["points"] = pts;
    j["masses"] = m.masses;
    j["c_rho"] = m.c_rho;
  }
  return j;
}

inline ModelSpec model_from_json(const Json& j) {
  ModelSpec m;
  try {
    const auto kind = j.at("kind").get<std::string>();
    m.gamma = j.value("gamma", 0.25);
    m.name = j.value("name", std::string{});
    if (kind == "ifs") {
      m.kind = ModelKind::ifs;
      const auto& maps = j.at("maps");
      require(maps.is_array() && !maps.empty(), "IFS model needs a nonempty map list");
      const auto first_offset = maps.at(0).at("offset").get<std::vector<double>>();
      m.ambient_dim = j.value("ambient_dim", static_cast<int>(first_offset.size()));
      for (const auto& jm : maps) {
        Similitude s;
        s.ratio = jm.at("ratio").get<double>();
        const auto off = jm.at("offset").get<std::vector<double>>();
        s.offset = Eigen::Map<const Point>(off.data(), static_cast<Eigen::Index>(off.size()));
        const auto d = static_cast<Eigen::Index>(off.size());
        if (jm.contains("matrix")) {
          const auto rows = jm.at("matrix").get<std::vector<std::vector<double>>>();
          require(static_cast<Eigen::Index>(rows.size()) == d, "IFS map matrix has wrong size");
          s.orthogonal.resize(d, d);
          for (Eigen::Index r = 0; r < d; ++r) {
            require(static_cast<Eigen::Index>(rows[r].size()) == d, "IFS map matrix has wrong size");
            for (Eigen::Index c = 0; c < d; ++c) s.orthogonal(r, c) = rows[r][c];
          }
        } else {
          s.orthogonal = Eigen::MatrixXd::Identity(d, d);
        }
        m.maps.push_back(std::move(s));
      }
      if (j.contains("weights")) {
        m.weights = j.at("weights").get<std::vector<double>>();
      } else {
        m.weights.assign(m.maps.size(), 1.0 / static_cast<double>(m.maps.size()));
      }
    } else if (kind == "pointcloud") {
      m.kind = ModelKind::pointcloud;
      for (const auto& jp : j.at("points")) {
        const auto v = jp.is_array() ? jp.get<std::vector<double>>() : std::vector<double>{jp.get<double>()};
        m.points.emplace_back(Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      m.masses = j.at("masses").get<std::vector<double>>();
      m.c_rho = j.value("c_rho", 1.0);
    } else {
      throw ValidationError("unknown model kind: " + kind);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

/// Loads either a builtin model ("builtin:...") or a JSON model file.
inline ModelSpec load_model(const std::string& source) {
  if (source.starts_with("builtin:")) return builtin_model(source);
  std::ifstream in(source);
  require(in.good(), "cannot read model file: " + source);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file is not valid JSON: " + source);
  }
  return model_from_json(j);
}

}  // namespace augtree
