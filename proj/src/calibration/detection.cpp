#include "igss/calibration/detection.hpp"

#include "igss/error.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace igss::calib {

SyntheticProjectionImage render_blobs(View view, const std::vector<Vec2>& uvs, const RasterSpec& spec) {
  if (!(spec.mm_per_pixel > 0.0) || !(spec.half_extent_mm > 0.0) || !(spec.blob_sigma_mm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "raster spec must be positive");
  }
  SyntheticProjectionImage img;
  img.view = view;
  img.mm_per_pixel = spec.mm_per_pixel;
  img.blob_sigma_mm = spec.blob_sigma_mm;
  const int n = static_cast<int>(std::lround(2.0 * spec.half_extent_mm / spec.mm_per_pixel));
  img.width = n;
  img.height = n;
  const double first = -spec.half_extent_mm + 0.5 * spec.mm_per_pixel;
  img.origin_mm = Vec2(first, first);
  img.pixels.assign(static_cast<std::size_t>(n) * n, 0.0f);

  const double sigma_px = spec.blob_sigma_mm / spec.mm_per_pixel;
  const int reach = static_cast<int>(std::ceil(10.0 * sigma_px));
  const double inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
  for (const auto& uv : uvs) {
    const Vec2 px = (uv - img.origin_mm) / spec.mm_per_pixel;
    if (px.x() < -0.5 || px.y() < -0.5 || px.x() > n - 0.5 || px.y() > n - 0.5) continue;
    const int c0 = static_cast<int>(std::lround(px.x()));
    const int r0 = static_cast<int>(std::lround(px.y()));
    for (int r = std::max(0, r0 - reach); r <= std::min(n - 1, r0 + reach); ++r) {
      for (int c = std::max(0, c0 - reach); c <= std::min(n - 1, c0 + reach); ++c) {
        const double dx = c - px.x();
        const double dy = r - px.y();
        img.pixels[static_cast<std::size_t>(r) * n + c] +=
            static_cast<float>(spec.amplitude * std::exp(-(dx * dx + dy * dy) * inv_two_var));
      }
    }
  }
  return img;
}

JigPattern project_pattern(const ProjectionModel& model, const std::vector<LabeledPoint3>& jig) {
  JigPattern out;
  for (const auto& f : jig) {
    out.labels.push_back(f.label);
    out.uv.push_back(project(model, f.position));
  }
  return out;
}

std::vector<Vec2> extract_blob_centroids(const SyntheticProjectionImage& image) {
  const int w = image.width;
  const int h = image.height;
  if (w <= 0 || h <= 0 || image.pixels.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::InvalidArgument, "raster dimensions do not match pixel buffer");
  }
  const float peak = *std::max_element(image.pixels.begin(), image.pixels.end());
  if (!(peak > 0.0f)) return {};
  const float threshold = 0.1f * peak;

  const double sigma_px = image.blob_sigma_mm / image.mm_per_pixel;
  const int window = static_cast<int>(std::ceil(8.0 * sigma_px));

  std::vector<int> label(image.pixels.size(), -1);
  std::vector<int> peaks;
  std::vector<int> stack;
  int next_label = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int idx = r * w + c;
      if (label[idx] >= 0 || image.pixels[idx] <= threshold) continue;
      // Flood the component, tracking its brightest pixel.
      int best = idx;
      stack.assign(1, idx);
      label[idx] = next_label;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        if (image.pixels[cur] > image.pixels[best]) best = cur;
        const int cr = cur / w;
        const int cc = cur % w;
        const int nbrs[4][2] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
        for (const auto& nb : nbrs) {
          if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
          const int ni = nb[0] * w + nb[1];
          if (label[ni] < 0 && image.pixels[ni] > threshold) {
            label[ni] = next_label;
            stack.push_back(ni);
          }
        }
      }
      ++next_label;

      peaks.push_back(best);
    }
  }

  // Intensity-weighted centroid over a square window about each peak.
  const double inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
  const int reach = static_cast<int>(std::ceil(10.0 * sigma_px));
  const std::size_t n = peaks.size();
  std::vector<Vec2> px(n);
  auto window_pixels = [&](std::size_t i, auto&& visit) {
    const int pr = peaks[i] / w;
    const int pc = peaks[i] % w;
    for (int rr = std::max(0, pr - window); rr <= std::min(h - 1, pr + window); ++rr)
      for (int cc = std::max(0, pc - window); cc <= std::min(w - 1, pc + window); ++cc) visit(rr, cc);
  };
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0, sx = 0.0, sy = 0.0;
    window_pixels(i, [&](int rr, int cc) {
      const double v = image.pixels[static_cast<std::size_t>(rr) * w + cc];
      sum += v;
      sx += v * cc;
      sy += v * rr;
    });
    px[i] = Vec2(sx / sum, sy / sum);
  }

  // Blobs close enough to leak into each other's window are fitted jointly as
  // a sum of Gaussians of the known width (damped Gauss-Newton on x, y, amplitude).
  std::vector<int> cluster(n, -1);
  int clusters = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cluster[i] >= 0) continue;
    std::vector<std::size_t> todo{i};
    cluster[i] = clusters;
    while (!todo.empty()) {
      const std::size_t k = todo.back();
      todo.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        const int dr = std::abs(peaks[k] / w - peaks[j] / w), dc = std::abs(peaks[k] % w - peaks[j] % w);
        if (cluster[j] < 0 && std::max(dr, dc) <= window + reach) {
          cluster[j] = clusters;
          todo.push_back(j);
        }
      }
    }
    ++clusters;
  }
  for (int cl = 0; cl < clusters; ++cl) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (cluster[i] == cl) members.push_back(i);
    if (members.size() < 2) continue;
    std::vector<int> pixels;
    std::vector<char> taken(image.pixels.size(), 0);
    for (std::size_t i : members)
      window_pixels(i, [&](int rr, int cc) {
        const int idx = rr * w + cc;
        if (!taken[idx]) pixels.push_back(idx);
        taken[idx] = 1;
      });
    const int m = static_cast<int>(members.size());
    Eigen::VectorXd theta(3 * m);
    for (int k = 0; k < m; ++k) {
      const int peak = peaks[members[k]];
      theta.segment<3>(3 * k) << peak % w, peak / w, image.pixels[static_cast<std::size_t>(peak)];
    }
    auto evaluate = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
      r.resize(static_cast<Eigen::Index>(pixels.size()));
      if (jac) jac->setZero(static_cast<Eigen::Index>(pixels.size()), 3 * m);
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        const double cc = pixels[p] % w, rr = pixels[p] / w;
        double model = 0.0;
        for (int k = 0; k < m; ++k) {
          const double dx = cc - t(3 * k), dy = rr - t(3 * k + 1);
          const double g = std::exp(-(dx * dx + dy * dy) * inv_two_var);
          model += t(3 * k + 2) * g;
          if (jac) {
            const double ag = t(3 * k + 2) * g * 2.0 * inv_two_var;
            (*jac)(static_cast<Eigen::Index>(p), 3 * k) = ag * dx;
            (*jac)(static_cast<Eigen::Index>(p), 3 * k + 1) = ag * dy;
            (*jac)(static_cast<Eigen::Index>(p), 3 * k + 2) = g;
          }
        }
        r(static_cast<Eigen::Index>(p)) = image.pixels[static_cast<std::size_t>(pixels[p])] - model;
      }
      return r.squaredNorm();
    };
    Eigen::VectorXd r, trial_r;
    Eigen::MatrixXd jac;
    double cost = evaluate(theta, r, &jac);
    double lambda = 1e-3;
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd g = jac.transpose() * r;
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal();
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      const Eigen::VectorXd next = theta + step;
      const double next_cost = evaluate(next, trial_r, nullptr);
      if (next_cost <= cost) {
        theta = next;
        cost = evaluate(theta, r, &jac);
        lambda = std::max(lambda * 0.1, 1e-12);
        if (step.head(3 * m).cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, theta.cwiseAbs().maxCoeff())) break;
      } else {
        lambda *= 10.0;
        if (lambda > 1e8) break;
      }
    }
    for (int k = 0; k < m; ++k) px[members[k]] = Vec2(theta(3 * k), theta(3 * k + 1));
  }

  std::vector<Vec2> centroids;
  for (const auto& p : px) centroids.push_back(image.pixel_center(p.x(), p.y()));
  return centroids;
}

namespace {

struct Matcher {
  const std::vector<Vec2>& blobs;
  const JigPattern& pattern;
  double tol;
  std::vector<int> assign;  // blob -> pattern index or -1
  std::vector<bool> used;
  std::size_t best_count = 0;
  std::vector<std::vector<int>> best;

  bool consistent(std::size_t blob, int label) const {
    for (std::size_t k = 0; k < blob; ++k) {
      if (assign[k] < 0) continue;
      const double db = (blobs[blob] - blobs[k]).norm();
      const double dp = (pattern.uv[label] - pattern.uv[assign[k]]).norm();
      if (std::abs(db - dp) > tol) return false;
    }
    return true;
  }

  void search(std::size_t blob, std::size_t count) {
    if (count + (blobs.size() - blob) < best_count) return;
    if (blob == blobs.size()) {
      if (count > best_count) {
        best_count = count;
        best.clear();
      }
      if (best.size() < 2) best.push_back(assign);
      return;
    }
    for (std::size_t j = 0; j < pattern.uv.size(); ++j) {
      if (used[j] || !consistent(blob, static_cast<int>(j))) continue;
      used[j] = true;
      assign[blob] = static_cast<int>(j);
      search(blob + 1, count + 1);
      assign[blob] = -1;
      used[j] = false;
    }
    search(blob + 1, count);
  }
};

}  // namespace

Detection2D detect_fiducials(const SyntheticProjectionImage& image, const JigPattern& pattern,
                             double tolerance_mm) {
  if (pattern.labels.size() != pattern.uv.size() || pattern.labels.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "jig pattern needs >= 4 labeled fiducials");
  }
  const std::vector<Vec2> blobs = extract_blob_centroids(image);
  if (blobs.size() < 3) {
    throw Error(ErrorCode::TooFewBlobs, std::to_string(blobs.size()) + " blobs found");
  }

  Matcher m{blobs, pattern, tolerance_mm, std::vector<int>(blobs.size(), -1),
            std::vector<bool>(pattern.uv.size(), false), 0, {}};
  m.search(0, 0);
  if (m.best_count < 3) {
    throw Error(ErrorCode::TooFewBlobs, "fewer than 3 blobs match the jig pattern");
  }
  if (m.best.size() > 1) {
    throw Error(ErrorCode::PatternAmbiguous, "several fiducial labelings fit the pattern");
  }

  const std::vector<int>& assign = m.best.front();
  Detection2D out;
  out.view = image.view;
  std::vector<bool> seen(pattern.uv.size(), false);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (assign[i] < 0) {
      out.unmatched.push_back(blobs[i]);
      continue;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < blobs.size(); ++k) {
      if (k == i || assign[k] < 0) continue;
      const double db = (blobs[i] - blobs[k]).norm();
      const double dp = (pattern.uv[assign[i]] - pattern.uv[assign[k]]).norm();
      worst = std::max(worst, std::abs(db - dp));
    }
    seen[assign[i]] = true;
    out.points.push_back({pattern.labels[assign[i]], blobs[i],
                          std::clamp(1.0 - worst / tolerance_mm, 0.0, 1.0)});
  }
  for (std::size_t j = 0; j < pattern.labels.size(); ++j) {
    if (!seen[j]) out.missing_labels.push_back(pattern.labels[j]);
  }
  return out;
}

void write_pgm16(std::ostream& out, const SyntheticProjectionImage& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  for (float v : image.pixels) {
    const auto q = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
    out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
  if (!out) throw Error(ErrorCode::IOFailure, "failed writing PGM");
}

SyntheticProjectionImage read_pgm16(std::istream& in) {
  auto next_token = [&in]() {
    std::string tok;
    while (in >> tok) {
      if (tok.front() == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw Error(ErrorCode::ParseError, "truncated PGM header");
  };
  if (next_token() != "P5") throw Error(ErrorCode::ParseError, "not a binary PGM (P5)");
  SyntheticProjectionImage img;
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    if (std::stoi(next_token()) != 65535) throw Error(ErrorCode::ParseError, "PGM must be 16-bit");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ParseError, "malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::ParseError, "bad PGM size");
  in.get();  // single whitespace before the raster
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (auto& v : img.pixels) {
    const int hi = in.get();
    const int lo = in.get();
    if (!in) throw Error(ErrorCode::ParseError, "truncated PGM raster");
    v = static_cast<float>((hi << 8) | lo);
  }
  return img;
}

std::string sidecar_json(const SyntheticProjectionImage& image) {
  nlohmann::json j;
  j["view"] = std::string(to_string(image.view));
  j["mm_per_pixel"] = image.mm_per_pixel;
  j["origin_mm"] = {image.origin_mm.x(), image.origin_mm.y()};
  j["blob_sigma_mm"] = image.blob_sigma_mm;
  return j.dump(2);
}

void apply_sidecar(SyntheticProjectionImage& image, const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    image.view = parse_view(j.at("view").get<std::string>());
    image.mm_per_pixel = j.at("mm_per_pixel").get<double>();
    image.origin_mm = Vec2(j.at("origin_mm").at(0).get<double>(), j.at("origin_mm").at(1).get<double>());
    image.blob_sigma_mm = j.value("blob_sigma_mm", 0.6);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("raster sidecar: ") + e.what());
  }
}

}  // namespace igss::calib
