#include "cpsi/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

void RnnWeights::validate() const {
  if (d_h <= 0) throw InvalidInput("RnnWeights: d_h must be positive");
  if (window_len <= 0) throw InvalidInput("RnnWeights: window_len must be positive");
  const auto n = static_cast<std::size_t>(d_h);
  if (W_h.size() != n * n) throw InvalidInput("RnnWeights: W_h shape mismatch");
  if (W_x.size() != n) throw InvalidInput("RnnWeights: W_x shape mismatch");
  if (W_b.size() != n) throw InvalidInput("RnnWeights: W_b shape mismatch");
  if (W_p.size() != n) throw InvalidInput("RnnWeights: W_p shape mismatch");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(W_h) || !finite(W_x) || !finite(W_b) || !finite(W_p))
    throw InvalidInput("RnnWeights: non-finite entry");
  activation.validate();
}

ForwardResult rnn_forward(const RnnWeights& w, std::span<const double> window) {
  if (window.empty()) throw InvalidInput("rnn_forward: empty window");
  for (double v : window)
    if (!std::isfinite(v)) throw InvalidInput("rnn_forward: non-finite input");

  const int d = w.d_h;
  std::vector<double> h(d, 0.0), u(d);
  ForwardResult out;
  out.trace.resize(window.size() * static_cast<std::size_t>(d));
  for (std::size_t t = 0; t < window.size(); ++t) {
    kernels::preact(w.W_h.data(), d, h.data(), w.W_x.data(), window[t], w.W_b.data(), u.data());
    for (int j = 0; j < d; ++j) {
      const int p = w.activation.piece_index(u[j]);
      out.trace[t * d + j] = static_cast<std::uint16_t>(p);
      h[j] = w.activation.eval_piece(u[j], p);
    }
  }
  out.prediction = kernels::dot(w.W_p.data(), h.data(), d);
  return out;
}

std::vector<double> rollout(const RnnWeights& w, std::span<const double> x, int pos, int l, int m) {
  const int n = static_cast<int>(x.size());
  if (l < 1 || m < 1) throw InvalidInput("rollout: l and m must be positive");
  if (pos < l || pos > n - m) throw RangeError("rollout: position out of range");

  std::vector<double> buf(x.begin() + (pos - l), x.begin() + pos);
  std::vector<double> preds;
  preds.reserve(m);
  for (int j = 0; j < m; ++j) {
    const double p = rnn_forward(w, buf).prediction;
    preds.push_back(p);
    std::rotate(buf.begin(), buf.begin() + 1, buf.end());
    buf.back() = p;
  }
  return preds;
}

namespace {

using nlohmann::json;

std::vector<double> read_vector(const json& j, const std::string& field, std::size_t expect) {
  if (!j.contains(field)) throw LoadError("weight file: missing field " + field);
  const json& v = j.at(field);
  if (!v.is_array()) throw LoadError("weight file: field " + field + " is not an array");
  if (v.size() != expect) {
    std::ostringstream os;
    os << "weight file: field " << field << " has length " << v.size() << ", expected " << expect;
    throw LoadError(os.str());
  }
  std::vector<double> out;
  out.reserve(expect);
  for (const json& e : v) {
    if (!e.is_number()) throw LoadError("weight file: non-numeric entry in " + field);
    out.push_back(e.get<double>());
  }
  for (double d : out)
    if (!std::isfinite(d)) throw LoadError("weight file: non-finite entry in " + field);
  return out;
}

std::vector<double> read_matrix(const json& j, const std::string& field, std::size_t rows,
                                std::size_t cols) {
  if (!j.contains(field)) throw LoadError("weight file: missing field " + field);
  const json& v = j.at(field);
  if (!v.is_array() || v.size() != rows) {
    std::ostringstream os;
    os << "weight file: field " << field << " must be a " << rows << "x" << cols << " matrix";
    throw LoadError(os.str());
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const json& row : v) {
    if (!row.is_array() || row.size() != cols) {
      std::ostringstream os;
      os << "weight file: field " << field << " must be a " << rows << "x" << cols << " matrix";
      throw LoadError(os.str());
    }
    for (const json& e : row) {
      if (!e.is_number()) throw LoadError("weight file: non-numeric entry in " + field);
      out.push_back(e.get<double>());
    }
  }
  for (double d : out)
    if (!std::isfinite(d)) throw LoadError("weight file: non-finite entry in " + field);
  return out;
}

int read_int(const json& j, const std::string& field) {
  if (!j.contains(field)) throw LoadError("weight file: missing field " + field);
  const json& v = j.at(field);
  if (!v.is_number_integer()) throw LoadError("weight file: field " + field + " must be integer");
  return v.get<int>();
}

}  // namespace

void save_weights(const RnnWeights& w, const std::string& path) {
  w.validate();
  json j;
  j["format_version"] = 1;
  j["d_h"] = w.d_h;
  j["l"] = w.window_len;
  j["activation"] = {{"knots", w.activation.knots},
                     {"slopes", w.activation.slopes},
                     {"intercepts", w.activation.intercepts}};
  json wh = json::array();
  for (int r = 0; r < w.d_h; ++r) {
    json row = json::array();
    for (int c = 0; c < w.d_h; ++c) row.push_back(w.W_h[r * w.d_h + c]);
    wh.push_back(std::move(row));
  }
  j["W_h"] = std::move(wh);
  j["W_x"] = w.W_x;
  j["W_b"] = w.W_b;
  j["W_p"] = w.W_p;

  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(1) << "\n";
  if (!os) throw IoError("write failed: " + path);
}

RnnWeights load_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open weight file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw LoadError(std::string("weight file: malformed JSON: ") + e.what());
  }
  const int version = read_int(j, "format_version");
  if (version != 1) throw LoadError("weight file: unsupported format_version");

  RnnWeights w;
  w.d_h = read_int(j, "d_h");
  w.window_len = read_int(j, "l");
  if (w.d_h <= 0) throw LoadError("weight file: field d_h must be positive");
  if (w.window_len <= 0) throw LoadError("weight file: field l must be positive");
  const auto d = static_cast<std::size_t>(w.d_h);

  if (!j.contains("activation")) throw LoadError("weight file: missing field activation");
  const json& a = j.at("activation");
  if (!a.contains("knots") || !a.at("knots").is_array())
    throw LoadError("weight file: field activation.knots missing or invalid");
  const std::size_t nk = a.at("knots").size();
  w.activation.knots = read_vector(a, "knots", nk);
  w.activation.slopes = read_vector(a, "slopes", nk + 1);
  w.activation.intercepts = read_vector(a, "intercepts", nk + 1);
  w.activation.detect_uniform();

  w.W_h = read_matrix(j, "W_h", d, d);
  w.W_x = read_vector(j, "W_x", d);
  w.W_b = read_vector(j, "W_b", d);
  w.W_p = read_vector(j, "W_p", d);

  try {
    w.validate();
  } catch (const InvalidInput& e) {
    throw LoadError(std::string("weight file: ") + e.what());
  }
  return w;
}

}  // namespace cpsi
