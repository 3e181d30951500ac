#include "msic/rd_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "msic/errors.hpp"

namespace msic {

namespace {

auto params_key(const SchemeParams& p) {
  return std::make_tuple(static_cast<int>(p.scheme), p.qp, p.n_c, p.n_ref, p.q_ref, p.block_size, p.qp_rgb,
                         p.weight_step_exp, p.basis_step_exp, p.center, p.intercept,
                         static_cast<int>(p.rgb_regressors));
}

bool point_less(const RdPoint& a, const RdPoint& b) {
  if (a.image != b.image) return a.image < b.image;
  return params_less(a.params, b.params);
}

// Hull input order: bits ascending, PSNR descending, then provenance so that
// exact duplicates resolve the same way for any input permutation.
bool hull_order(const RdPoint& a, const RdPoint& b) {
  if (a.bits != b.bits) return a.bits < b.bits;
  if (a.psnr != b.psnr) return a.psnr > b.psnr;
  return point_less(a, b);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw FormatError("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw FormatError("not an integer: '" + s + "'");
  return v;
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

bool params_less(const SchemeParams& a, const SchemeParams& b) { return params_key(a) < params_key(b); }

std::vector<SchemeParams> ParameterGrid::configurations() const {
  std::vector<SchemeParams> out{base};
  auto expand = [&out](const std::vector<int>& values, int SchemeParams::*field) {
    if (values.empty()) return;
    std::vector<SchemeParams> next;
    for (const auto& p : out) {
      for (int v : values) {
        auto q = p;
        q.*field = v;
        next.push_back(q);
      }
    }
    out = std::move(next);
  };
  expand(qp, &SchemeParams::qp);
  expand(n_c, &SchemeParams::n_c);
  expand(n_ref, &SchemeParams::n_ref);
  expand(q_ref, &SchemeParams::q_ref);
  expand(block_size, &SchemeParams::block_size);
  expand(qp_rgb, &SchemeParams::qp_rgb);
  std::sort(out.begin(), out.end(), params_less);
  return out;
}

SweepResult sweep(const std::vector<SweepImage>& images, const ParameterGrid& grid, int jobs) {
  const auto configs = grid.configurations();
  struct Task {
    const SweepImage* image;
    SchemeParams params;
    std::optional<RdPoint> point;
    std::string error;
  };
  std::vector<Task> tasks;
  for (const auto& img : images) {
    for (const auto& p : configs) tasks.push_back(Task{&img, p, std::nullopt, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&tasks, &next]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      auto& t = tasks[i];
      try {
        const auto enc = encode(t.image->cube, t.params);
        // rate and quality come from the bytes a decoder would actually see
        const auto bytes = serialize_container(enc.container);
        const auto parsed = parse_container(bytes);
        RdPoint pt;
        pt.bits = 8.0 * static_cast<double>(bytes.size());
        pt.psnr = psnr(t.image->cube, decode(parsed));
        pt.params = t.params;
        pt.image = t.image->id;
        if (t.params.scheme == Scheme::hpcls_rgb) {
          pt.preview_psnr = psnr(*enc.preview_target, decode_hpcls_rgb_preview(parsed));
        }
        t.point = pt;
      } catch (const std::exception& e) {
        t.error = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SweepResult out;
  for (auto& t : tasks) {
    if (t.point) {
      if (std::isinf(t.point->psnr)) ++out.infinite_psnr;
      out.points.push_back(std::move(*t.point));
    } else {
      out.failures.push_back(SweepFailure{t.image->id, t.params, t.error});
    }
  }
  std::sort(out.points.begin(), out.points.end(), point_less);
  return out;
}

std::vector<RdPoint> average_over_images(const std::vector<RdPoint>& points, std::size_t* excluded) {
  std::set<std::string> images;
  for (const auto& p : points) images.insert(p.image);

  auto cmp = [](const SchemeParams& a, const SchemeParams& b) { return params_less(a, b); };
  std::map<SchemeParams, std::vector<const RdPoint*>, decltype(cmp)> groups(cmp);
  for (const auto& p : points) groups[p.params].push_back(&p);

  std::vector<RdPoint> out;
  std::size_t dropped = 0;
  for (const auto& [params, members] : groups) {
    std::set<std::string> seen;
    for (const auto* m : members) {
      if (!seen.insert(m->image).second) {
        throw IncompleteGridError("duplicate point for image " + m->image + " (" + describe_params(params) + ")");
      }
    }
    if (seen.size() != images.size()) {
      throw IncompleteGridError("configuration " + scheme_name(params.scheme) + " " + describe_params(params) +
                                " is missing on " + std::to_string(images.size() - seen.size()) + " image(s)");
    }
    if (std::any_of(members.begin(), members.end(), [](const RdPoint* m) { return std::isinf(m->psnr); })) {
      ++dropped;
      continue;
    }
    RdPoint avg;
    avg.params = params;
    avg.image = images.size() == 1 ? *images.begin() : "mean";
    double preview_sum = 0.0;
    bool has_preview = true;
    // members are summed in image order so the result ignores input order
    std::vector<const RdPoint*> ordered(members);
    std::sort(ordered.begin(), ordered.end(), [](const RdPoint* a, const RdPoint* b) { return a->image < b->image; });
    for (const auto* m : ordered) {
      avg.bits += m->bits;
      avg.psnr += m->psnr;
      if (m->preview_psnr) {
        preview_sum += *m->preview_psnr;
      } else {
        has_preview = false;
      }
    }
    const auto n = static_cast<double>(ordered.size());
    avg.bits /= n;
    avg.psnr /= n;
    if (has_preview) avg.preview_psnr = preview_sum / n;
    out.push_back(avg);
  }
  if (excluded != nullptr) *excluded = dropped;
  return out;
}

std::vector<RdPoint> hull_then_average(const std::vector<RdPoint>& points, std::size_t* excluded) {
  std::map<std::string, std::vector<RdPoint>> per_image;
  for (const auto& p : points) per_image[p.image].push_back(p);
  auto cmp = [](const SchemeParams& a, const SchemeParams& b) { return params_less(a, b); };
  std::map<SchemeParams, std::size_t, decltype(cmp)> hull_count(cmp);
  for (const auto& [image, pts] : per_image) {
    std::vector<RdPoint> finite;
    std::copy_if(pts.begin(), pts.end(), std::back_inserter(finite), [](const RdPoint& p) { return std::isfinite(p.psnr); });
    for (const auto& h : convex_hull(finite).points) ++hull_count[h.params];
  }
  std::vector<RdPoint> kept;
  for (const auto& p : points) {
    const auto it = hull_count.find(p.params);
    if (it != hull_count.end() && it->second == per_image.size()) kept.push_back(p);
  }
  return average_over_images(kept, excluded);
}

RdCurve convex_hull(const std::vector<RdPoint>& points, std::string label) {
  std::vector<RdPoint> sorted(points);
  std::sort(sorted.begin(), sorted.end(), hull_order);
  RdCurve hull;
  hull.label = std::move(label);
  auto& h = hull.points;
  for (const auto& p : sorted) {
    // dominated (or same rate, lower quality): never on the envelope
    if (!h.empty() && p.psnr <= h.back().psnr) continue;
    while (h.size() >= 2) {
      const auto& a = h[h.size() - 2];
      const auto& b = h.back();
      const double slope_ab = (b.psnr - a.psnr) / (b.bits - a.bits);
      const double slope_bp = (p.psnr - b.psnr) / (p.bits - b.bits);
      if (slope_bp > slope_ab + kHullSlopeTolerance) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(p);
    h.back().on_hull = true;
  }
  return hull;
}

RdCurve simulcast_compose(const RdCurve& preview, const RdCurve& msi, double preview_quality) {
  const RdPoint* cheapest = nullptr;
  for (const auto& p : preview.points) {
    if (p.psnr >= preview_quality && (cheapest == nullptr || p.bits < cheapest->bits)) cheapest = &p;
  }
  if (cheapest == nullptr) {
    throw RangeError("no preview point reaches " + format_double(preview_quality, 2) + " dB");
  }
  RdCurve out;
  out.label = "simulcast(" + preview.label + "+" + msi.label + ")";
  for (auto p : msi.points) {
    p.bits += cheapest->bits;
    p.preview_psnr = cheapest->psnr;
    out.points.push_back(std::move(p));
  }
  return out;
}

RdCurve best_of(const std::vector<RdCurve>& curves, std::string label) {
  std::vector<RdPoint> all;
  for (const auto& c : curves) all.insert(all.end(), c.points.begin(), c.points.end());
  return convex_hull(all, std::move(label));
}

std::optional<double> bits_at_psnr(const RdCurve& hull, double target) {
  const auto& h = hull.points;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].psnr == target) return h[i].bits;
    if (i + 1 < h.size() && h[i].psnr < target && target < h[i + 1].psnr) {
      const double t = (target - h[i].psnr) / (h[i + 1].psnr - h[i].psnr);
      return h[i].bits + t * (h[i + 1].bits - h[i].bits);
    }
  }
  return std::nullopt;
}

void emit_csv(const std::vector<RdCurve>& curves, std::ostream& out) {
  out << "label,image,bits,psnr,on_hull,scheme,qp,n_c,n_ref,q_ref,block_size,qp_rgb,preview_psnr\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      const auto& q = p.params;
      const bool plain = q.scheme == Scheme::plain;
      const bool pca = q.scheme == Scheme::pca;
      out << c.label << ',' << p.image << ',' << format_double(p.bits, 3) << ',' << format_double(p.psnr, 6) << ','
          << (p.on_hull ? 1 : 0) << ',' << scheme_name(q.scheme) << ',' << q.qp << ','
          << (plain ? "" : std::to_string(q.n_c)) << ',' << (plain || pca ? "" : std::to_string(q.n_ref)) << ','
          << (plain || pca ? "" : std::to_string(q.q_ref)) << ','
          << (plain || pca ? "" : std::to_string(q.block_size)) << ','
          << (q.scheme == Scheme::hpcls_rgb ? std::to_string(q.qp_rgb) : "") << ','
          << (p.preview_psnr ? format_double(*p.preview_psnr, 6) : "") << '\n';
    }
  }
}

void emit_csv(const std::vector<RdCurve>& curves, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  emit_csv(curves, out);
  if (!out) throw IoError("failed writing " + path);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_int(parts[0]));
    } else if (parts.size() == 3) {
      const int first = parse_int(parts[0]);
      const int last = parse_int(parts[1]);
      const int step = parse_int(parts[2]);
      if (step <= 0 || last < first) throw FormatError("invalid range '" + item + "'");
      for (int v = first; v <= last; v += step) out.push_back(v);
    } else {
      throw FormatError("invalid list item '" + item + "'");
    }
  }
  if (out.empty()) throw FormatError("empty value list");
  return out;
}

Scheme parse_scheme(const std::string& name) {
  if (name == "plain") return Scheme::plain;
  if (name == "pca") return Scheme::pca;
  if (name == "hpcls") return Scheme::hpcls;
  if (name == "hpcls-rgb" || name == "hpcls_rgb") return Scheme::hpcls_rgb;
  throw UnsupportedSchemeError("unknown scheme '" + name + "'");
}

SweepManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  SweepManifest m;
  bool has_scheme = false;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "label") {
      m.label = value;
    } else if (key == "scheme") {
      m.grid.base.scheme = parse_scheme(value);
      has_scheme = true;
    } else if (key == "images") {
      for (const auto& img : split(value, ',')) {
        const std::filesystem::path p(img);
        m.images.push_back((p.is_absolute() ? p : std::filesystem::path(base_dir) / p).lexically_normal().string());
      }
    } else if (key == "qp") {
      m.grid.qp = parse_int_list(value);
    } else if (key == "n_c") {
      m.grid.n_c = parse_int_list(value);
    } else if (key == "n_ref") {
      m.grid.n_ref = parse_int_list(value);
    } else if (key == "q_ref") {
      m.grid.q_ref = parse_int_list(value);
    } else if (key == "block_size") {
      m.grid.block_size = parse_int_list(value);
    } else if (key == "qp_rgb") {
      m.grid.qp_rgb = parse_int_list(value);
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!has_scheme) throw FormatError("manifest lacks a scheme");
  if (m.images.empty()) throw FormatError("manifest lists no images");
  if (m.label.empty()) m.label = scheme_name(m.grid.base.scheme);
  return m;
}

SweepManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  auto m = parse_manifest(buf.str(), dir.empty() ? "." : dir.string());
  for (const auto& img : m.images) {
    if (!std::filesystem::is_regular_file(img)) throw IoError("manifest image not found: " + img);
  }
  return m;
}

}  // namespace msic
