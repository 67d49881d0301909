#include "slitflow/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <system_error>

namespace slitflow {

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + target.parent_path().string());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
  std::size_t n = std::fwrite(content.data(), 1, content.size(), f);
  bool ok = (n == content.size()) && (std::fclose(f) == 0);
  if (!ok) {
    fs::remove(tmp, ec);
    throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into place: " + target.string());
  }
}

std::string trajectory_csv(const std::vector<LoewnerRun>& runs) {
  std::string out = "t,path_id,point_id,re_w,im_w,re_d,im_d,alive\n";
  for (const LoewnerRun& r : runs) {
    for (std::size_t i = 0; i < r.tracked.size(); ++i) {
      const TrackedPoint& tp = r.tracked[i];
      for (std::size_t k = 0; k < r.times.size(); ++k) {
        bool alive = tp.death_time < 0.0 || r.times[k] < tp.death_time;
        append_num(out, r.times[k]);
        out += ',';
        out += std::to_string(r.path_id);
        out += ',';
        out += std::to_string(i);
        out += ',';
        append_num(out, tp.w[k].real());
        out += ',';
        append_num(out, tp.w[k].imag());
        out += ',';
        append_num(out, tp.d[k].real());
        out += ',';
        append_num(out, tp.d[k].imag());
        out += alive ? ",1\n" : ",0\n";
      }
    }
  }
  return out;
}

std::string trace_svg(const std::vector<std::vector<cplx>>& traces) {
  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
  bool seen = false;
  for (const auto& tr : traces)
    for (cplx z : tr) {
      if (!seen) {
        lo_x = hi_x = z.real();
        lo_y = hi_y = z.imag();
        seen = true;
      }
      lo_x = std::min(lo_x, z.real());
      hi_x = std::max(hi_x, z.real());
      lo_y = std::min(lo_y, z.imag());
      hi_y = std::max(hi_y, z.imag());
    }
  if (!seen) {
    lo_x = lo_y = -1.0;
    hi_x = hi_y = 1.0;
  }
  lo_y = std::min(lo_y, 0.0);  // keep the boundary line in frame
  double span_x = std::max(hi_x - lo_x, 1e-9);
  double span_y = std::max(hi_y - lo_y, 1e-9);
  double pad = 0.06 * std::max(span_x, span_y);
  lo_x -= pad;
  hi_x += pad;
  lo_y -= pad;
  hi_y += pad;
  span_x = hi_x - lo_x;
  span_y = hi_y - lo_y;
  const double W = 640.0, H = 480.0;
  double scale = std::min(W / span_x, H / span_y);
  auto px = [&](cplx z) { return (z.real() - lo_x) * scale; };
  auto py = [&](cplx z) { return H - (z.imag() - lo_y) * scale; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#17becf"};
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
      "viewBox=\"0 0 640 480\">\n"
      "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  // the real axis (domain boundary)
  out += "<line x1=\"0\" x2=\"640\" y1=\"";
  append_num(out, py(cplx(0.0, 0.0)));
  out += "\" y2=\"";
  append_num(out, py(cplx(0.0, 0.0)));
  out += "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].empty()) continue;
    out += "<polyline fill=\"none\" stroke=\"";
    out += palette[i % 6];
    out += "\" stroke-width=\"1.5\" points=\"";
    for (cplx z : traces[i]) {
      append_num(out, px(z));
      out += ',';
      append_num(out, py(z));
      out += ' ';
    }
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string ensemble_csv(const GffEnsemble& ens) {
  std::string out = "sample";
  std::size_t cols = ens.samples.empty() ? 0 : ens.samples[0].size();
  for (std::size_t j = 0; j < cols; ++j) {
    out += ",pairing_";
    out += std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < ens.samples.size(); ++i) {
    out += std::to_string(i);
    for (double v : ens.samples[i]) {
      out += ',';
      append_num(out, v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace slitflow
