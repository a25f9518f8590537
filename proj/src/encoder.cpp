/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "encoder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "error.hpp"

namespace mosseg {

void EncoderConfig::Validate() const {
  Check(stride == 1 || stride == 2 || stride == 4 || stride == 8, ErrorKind::kInvalidArgument,
        "stride must be one of 1, 2, 4, 8");
  Check(key_channels == feature_channels, ErrorKind::kInvalidArgument,
        "key_channels must equal feature_channels");
  Check(gradient_bins >= 2 && gradient_bins % 2 == 0, ErrorKind::kInvalidArgument,
        "gradient_bins must be even and >= 2");
  Check(descriptor_channels() <= key_channels, ErrorKind::kInvalidArgument,
        "key_channels too small for " + std::to_string(gradient_bins) + " gradient bins");
  Check(std::isfinite(coord_weight) && coord_weight >= 0.0, ErrorKind::kInvalidArgument,
        "coord_weight must be finite and >= 0");
}

AdapterParams AdapterParams::Zero(int channels, double alpha) {
  AdapterParams p;
  p.alpha = alpha;
  p.channels = channels;
  p.map.assign(static_cast<std::size_t>(channels) * channels, 0.0);
  p.bias.assign(channels, 0.0);
  return p;
}

AdapterParams AdapterParams::Identity(int channels, double alpha) {
  AdapterParams p = Zero(channels, alpha);
  for (int i = 0; i < channels; ++i) p.map[static_cast<std::size_t>(i) * channels + i] = 1.0;
  return p;
}

double AdapterParams::MapNorm() const {
  double s = 0.0;
  for (double v : map) s += v * v;
  return std::sqrt(s);
}

int MirroredBin(int bin, int bins) { return ((bins / 2 - bin) % bins + bins) % bins; }

namespace {

int Reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace

GrayImage PadToMultiple(const GrayImage& image, int stride) {
  const int h = (image.height() + stride - 1) / stride * stride;
  const int w = (image.width() + stride - 1) / stride * stride;
  if (h == image.height() && w == image.width()) return image;
  GrayImage out(image.channels(), h, w);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = Reflect(y, image.height());
      for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, sy, Reflect(x, image.width()));
    }
  }
  return out;
}

FeatureGrid EncodeRaw(const GrayImage& image, const EncoderConfig& cfg) {
  cfg.Validate();
  Check(image.channels() == 1, ErrorKind::kInvalidArgument, "image must be single-channel");
  Check(image.height() > 0 && image.width() > 0, ErrorKind::kInvalidArgument, "empty grid");
  Check(image.AllFinite(), ErrorKind::kInvalidArgument, "invalid image");

  const GrayImage padded = PadToMultiple(image, cfg.stride);
  const int h = padded.height();
  const int w = padded.width();
  const int s = cfg.stride;
  const int ch = h / s;
  const int cw = w / s;
  const int bins = cfg.gradient_bins;
  const double bin_width = 2.0 * std::numbers::pi / bins;
  const double cell_px = static_cast<double>(s) * s;

  auto px = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return padded.at(0, y, x) / 255.0;
  };

  FeatureGrid out(cfg.feature_channels, ch, cw);
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      // Shifted by the first pixel.
      const double first = px(cy * s, cx * s);
      double shift = 0.0;
      for (int y = cy * s; y < (cy + 1) * s; ++y)
        for (int x = cx * s; x < (cx + 1) * s; ++x) shift += px(y, x) - first;
      const double mean = first + shift / cell_px;

      double var = 0.0;
      double lap_energy = 0.0;
      for (int y = cy * s; y < (cy + 1) * s; ++y) {
        for (int x = cx * s; x < (cx + 1) * s; ++x) {
          const double v = px(y, x);
          var += (v - mean) * (v - mean);

          const double gx = 0.5 * (px(y, x + 1) - px(y, x - 1));
          const double gy = 0.5 * (px(y + 1, x) - px(y - 1, x));
          const double mag = std::sqrt(gx * gx + gy * gy);
          if (mag > 0.0) {
            const double theta = std::atan2(gy, gx);
            int bin = static_cast<int>(std::floor(theta / bin_width + 0.5));
            bin = ((bin % bins) + bins) % bins;
            out.at(kFirstGradientChannel + bin, cy, cx) += mag / cell_px;
          }

          const double lap = px(y - 1, x) + px(y + 1, x) + px(y, x - 1) + px(y, x + 1) - 4.0 * v;
          lap_energy += lap * lap;
        }
      }
      out.at(kMeanChannel, cy, cx) = mean - 0.5;
      out.at(kVarianceChannel, cy, cx) = var / cell_px;
      out.at(LaplacianChannel(cfg), cy, cx) = lap_energy / cell_px;
      out.at(RowChannel(cfg), cy, cx) = cfg.coord_weight * ((cy + 0.5) / ch - 0.5);
      out.at(ColChannel(cfg), cy, cx) = cfg.coord_weight * ((cx + 0.5) / cw - 0.5);
    }
  }
  return out;
}

FeatureGrid NormalizePositions(const FeatureGrid& grid) {
  FeatureGrid out = grid;
  for (int p = 0; p < grid.plane_size(); ++p) {
    double sq = 0.0;
    for (int c = 0; c < grid.channels(); ++c) sq += grid.plane(c)[p] * grid.plane(c)[p];
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (int c = 0; c < grid.channels(); ++c) out.plane(c)[p] = grid.plane(c)[p] * inv;
  }
  return out;
}

QueryEncoding EncodeQuery(const GrayImage& image, const EncoderConfig& cfg,
                          const AdapterParams* adapter, int frame_index) {
  FeatureGrid raw = EncodeRaw(image, cfg);
  if (adapter != nullptr) raw = AdapterApply(raw, *adapter);
  QueryEncoding enc;
  enc.feat = NormalizePositions(raw);
  enc.keys = Flatten(enc.feat, frame_index);
  return enc;
}

FeatureGrid EncodeValues(const FeatureGrid& feat, const MaskMap& mask,
                         const std::vector<int>& object_ids, const EncoderConfig& cfg) {
  const int s = cfg.stride;
  Check((mask.height() + s - 1) / s == feat.height() && (mask.width() + s - 1) / s == feat.width(),
        ErrorKind::kInvalidArgument, "mask dims do not match feature grid at this stride");
  std::vector<int> planes;
  for (int id : object_ids) {
    const int plane = mask.PlaneOf(id);
    Check(id != 0 && plane > 0, ErrorKind::kInvalidArgument, "unknown object");
    planes.push_back(plane);
  }

  const int fc = feat.channels();
  FeatureGrid out(fc + static_cast<int>(object_ids.size()), feat.height(), feat.width());
  std::copy(feat.data().begin(), feat.data().end(), out.data().begin());

  const double cell_px = static_cast<double>(s) * s;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    const auto prob = mask.prob_plane(planes[k]);
    auto dst = out.plane(fc + static_cast<int>(k));
    for (int cy = 0; cy < feat.height(); ++cy) {
      for (int cx = 0; cx < feat.width(); ++cx) {
        double sum = 0.0;
        for (int y = cy * s; y < (cy + 1) * s; ++y) {
          const int sy = Reflect(y, mask.height());
          for (int x = cx * s; x < (cx + 1) * s; ++x)
            sum += prob[static_cast<std::size_t>(sy) * mask.width() + Reflect(x, mask.width())];
        }
        dst[static_cast<std::size_t>(cy) * feat.width() + cx] = sum / cell_px;
      }
    }
  }
  return out;
}

FeatureGrid EncodeValue(const FeatureGrid& feat, const MaskMap& mask, int object_id,
                        const EncoderConfig& cfg) {
  return EncodeValues(feat, mask, {object_id}, cfg);
}

FeatureGrid AdapterApply(const FeatureGrid& x, const AdapterParams& p) {
  Check(x.channels() == p.channels, ErrorKind::kInvalidArgument,
        "adapter channel mismatch: grid has " + std::to_string(x.channels()) +
            ", adapter expects " + std::to_string(p.channels));
  Check(p.map.size() == static_cast<std::size_t>(p.channels) * p.channels &&
            p.bias.size() == static_cast<std::size_t>(p.channels),
        ErrorKind::kInvalidArgument, "adapter parameter shape mismatch");
  const int c = p.channels;
  FeatureGrid out = x;
  std::vector<double> v(c);
  for (int pos = 0; pos < x.plane_size(); ++pos) {
    for (int i = 0; i < c; ++i) v[i] = x.plane(i)[pos];
    for (int i = 0; i < c; ++i) {
      double branch = p.bias[i];
      for (int j = 0; j < c; ++j) branch += p.map[static_cast<std::size_t>(i) * c + j] * v[j];
      out.plane(i)[pos] = v[i] + p.alpha * branch;
    }
  }
  return out;
}

AdapterParams FitAdapter(const std::vector<std::pair<FeatureGrid, FeatureGrid>>& pairs,
                         double alpha, double ridge) {
  Check(!pairs.empty(), ErrorKind::kInvalidArgument, "at least one training pair required");
  Check(alpha != 0.0 && std::isfinite(alpha), ErrorKind::kInvalidArgument,
        "alpha must be nonzero to fit");
  Check(ridge > 0.0 && std::isfinite(ridge), ErrorKind::kInvalidArgument, "ridge must be > 0");
  const int c = pairs.front().first.channels();
  Check(c >= 1, ErrorKind::kInvalidArgument, "training grids have no channels");
  for (const auto& [src, dst] : pairs) {
    Check(src.channels() == c && dst.channels() == c && src.height() == dst.height() &&
              src.width() == dst.width(),
          ErrorKind::kInvalidArgument, "training pair shapes differ");
  }

  // Residual target r = (target - source) / alpha is regressed on [source; 1].
  // Scaling the objective by 1/alpha^2 turns the map penalty into ridge/alpha^2.
  const int d = c + 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, c);
  Eigen::VectorXd xrow(d);
  Eigen::VectorXd rrow(c);
  for (const auto& [src, dst] : pairs) {
    for (int pos = 0; pos < src.plane_size(); ++pos) {
      for (int i = 0; i < c; ++i) {
        xrow[i] = src.plane(i)[pos];
        rrow[i] = (dst.plane(i)[pos] - src.plane(i)[pos]) / alpha;
      }
      xrow[c] = 1.0;
      gram.noalias() += xrow * xrow.transpose();
      cross.noalias() += xrow * rrow.transpose();
    }
  }
  const double lambda = ridge / (alpha * alpha);
  for (int i = 0; i < c; ++i) gram(i, i) += lambda;
  const Eigen::MatrixXd w = gram.ldlt().solve(cross);  // d x c

  AdapterParams p = AdapterParams::Zero(c, alpha);
  for (int out_ch = 0; out_ch < c; ++out_ch) {
    for (int in_ch = 0; in_ch < c; ++in_ch)
      p.map[static_cast<std::size_t>(out_ch) * c + in_ch] = w(in_ch, out_ch);
    p.bias[out_ch] = w(c, out_ch);
  }
  Check(std::all_of(p.map.begin(), p.map.end(), [](double v) { return std::isfinite(v); }),
        ErrorKind::kInternal, "adapter fit produced non-finite weights");
  return p;
}

double AdapterObjective(const std::vector<std::pair<FeatureGrid, FeatureGrid>>& pairs,
                        const AdapterParams& p) {
  double total = 0.0;
  for (const auto& [src, dst] : pairs) {
    const FeatureGrid adapted = AdapterApply(src, p);
    for (std::size_t i = 0; i < adapted.size(); ++i) {
      const double e = dst.data()[i] - adapted.data()[i];
      total += e * e;
    }
  }
  return total;
}

}  // namespace mosseg
