#include "grm/synth.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "grm/knowledge_graph.hpp"
#include "text_io.hpp"

namespace grm {

std::vector<Detection> simulate_detections(const Sample& sample, Real threshold) {
  std::vector<Detection> out;
  std::copy_if(sample.detections.begin(), sample.detections.end(), std::back_inserter(out),
               [&](const Detection& d) { return d.confidence > threshold; });
  return out;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Real draw_beta(std::mt19937_64& rng, Real a, Real b) {
  std::gamma_distribution<Real> ga(a, 1.0);
  std::gamma_distribution<Real> gb(b, 1.0);
  const Real x = ga(rng);
  const Real y = gb(rng);
  return x / (x + y);
}

// Confidences live on the same 1e-6 grid as everything else in the text
// formats; keep them strictly inside (0, 1).
Real quantize_confidence(Real c) { return std::clamp(quantize_micro(c), 1e-6, 1.0 - 1e-6); }

Vector noisy(const Eigen::Ref<const Vector>& base, Real scale, std::mt19937_64& rng) {
  std::normal_distribution<Real> noise(0.0, 1.0);
  Vector v(base.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const Real e = scale > 0 ? scale * noise(rng) : 0.0;
    v(k) = quantize_micro(base(k) + e);
  }
  return v;
}

}  // namespace

WorldModel default_world(std::uint64_t seed, const WorldOptions& options) {
  WorldModel w;
  w.relationship_names = {"friends", "family", "couple", "professional", "commercial",
                          "no-relation"};
  w.object_names = {"desk",  "chair", "cup",  "laptop",     "tie",     "bed",
                    "couch", "pizza", "bowl", "wine-glass", "handbag", "cell-phone"};
  w.union_dim = options.union_dim;
  w.person_dim = options.person_dim;
  w.geometry_dim = options.geometry_dim;
  w.feature_dim = options.feature_dim;
  w.noise_scale = options.noise_scale;
  w.context_strength = options.context_strength;
  w.confidence = options.confidence;

  w.cooccurrence.resize(6, 12);
  // clang-format off
  //                 desk  chair cup  laptop tie  bed  couch pizza bowl wine handbag phone
  w.cooccurrence << 0.00, 0.40, 0.50, 0.00, 0.00, 0.00, 0.30, 0.70, 0.50, 0.30, 0.00, 0.30,  // friends
                    0.00, 0.40, 0.30, 0.00, 0.00, 0.70, 0.70, 0.00, 0.50, 0.00, 0.00, 0.00,  // family
                    0.00, 0.40, 0.30, 0.00, 0.00, 0.40, 0.00, 0.00, 0.00, 0.70, 0.60, 0.00,  // couple
                    0.80, 0.40, 0.30, 0.80, 0.60, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.30,  // professional
                    0.50, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.60, 0.70,  // commercial
                    0.00, 0.40, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.30, 0.60;  // no-relation
  // clang-format on

  std::mt19937_64 rng(mix(seed ^ 0x776f726c64ull));
  std::uniform_real_distribution<Real> unit(-1.0, 1.0);
  auto uniform_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = unit(rng);
    return m;
  };
  const int pair_dim = options.union_dim + 2 * options.person_dim;
  Matrix base = uniform_matrix(4, pair_dim);
  const Matrix offsets = uniform_matrix(6, pair_dim);
  // friends/couple share base 0, family/professional share base 1
  const int base_of[6] = {0, 1, 0, 1, 2, 3};
  const bool confusable[6] = {true, true, true, true, false, false};
  w.relationship_prototypes.resize(6, pair_dim);
  for (int r = 0; r < 6; ++r) {
    w.relationship_prototypes.row(r) = base.row(base_of[r]);
    if (confusable[r]) w.relationship_prototypes.row(r) += options.confusable_offset * offsets.row(r);
  }
  w.object_prototypes = uniform_matrix(12, options.feature_dim);
  w.context_prototypes = uniform_matrix(6, options.feature_dim);
  w.relationship_prototypes = w.relationship_prototypes.unaryExpr(&quantize_micro);
  w.object_prototypes = w.object_prototypes.unaryExpr(&quantize_micro);
  w.context_prototypes = w.context_prototypes.unaryExpr(&quantize_micro);
  validate(w);
  return w;
}

void validate(const WorldModel& w) {
  const int m = w.relationships();
  const int n = w.objects();
  if (m == 0 || n == 0) throw ValidationError("world: empty relationship or object set");
  const int pair_dim = w.union_dim + 2 * w.person_dim;
  if (w.union_dim < 0 || w.person_dim < 0 || w.geometry_dim < 0 || w.feature_dim <= 0 ||
      pair_dim <= 0) {
    throw ValidationError("world: invalid feature dimensions");
  }
  if (w.cooccurrence.rows() != m || w.cooccurrence.cols() != n) {
    throw ValidationError("world: co-occurrence matrix " + shape_of(w.cooccurrence) +
                          " vs " + shape_string(m, n));
  }
  if ((w.cooccurrence.array() < 0).any() || (w.cooccurrence.array() > 1).any()) {
    throw ValidationError("world: co-occurrence probabilities outside [0,1]");
  }
  if (w.relationship_prototypes.rows() != m || w.relationship_prototypes.cols() != pair_dim ||
      w.object_prototypes.rows() != n || w.object_prototypes.cols() != w.feature_dim) {
    throw ValidationError("world: prototype matrices have the wrong shape");
  }
  if (w.context_prototypes.rows() != m || w.context_prototypes.cols() != w.feature_dim) {
    throw ValidationError("world: context prototypes " + shape_of(w.context_prototypes) +
                          " vs " + shape_string(m, w.feature_dim));
  }
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if ((w.relationship_prototypes.row(a) - w.relationship_prototypes.row(b)).norm() == 0) {
        throw ValidationError("world: relationship prototypes " + std::to_string(a) + " and " +
                              std::to_string(b) + " coincide");
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if ((w.object_prototypes.row(a) - w.object_prototypes.row(b)).norm() == 0) {
        throw ValidationError("world: object prototypes " + std::to_string(a) + " and " +
                              std::to_string(b) + " coincide");
      }
    }
  }
  const auto& c = w.confidence;
  if (!(c.present_a > 0 && c.present_b > 0 && c.clutter_a > 0 && c.clutter_b > 0) ||
      !(c.clutter_rate >= 0 && c.clutter_rate <= 1) || !(w.noise_scale >= 0) ||
      !(w.context_strength >= 0)) {
    throw ValidationError("world: invalid confidence or noise parameters");
  }
}

Dataset generate(const WorldModel& world, int n, std::uint64_t seed) {
  validate(world);
  if (n <= 0) throw ValidationError("generate: sample count must be positive");
  const int m = world.relationships();
  const int objects = world.objects();
  Dataset data(n);
  for (int k = 0; k < n; ++k) {
    std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(k) + 1)));
    std::uniform_int_distribution<int> label_dist(0, m - 1);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    std::uniform_real_distribution<Real> sym(-1.0, 1.0);

    Sample& s = data[k];
    s.id = k;
    s.label = label_dist(rng);
    const Vector pair = noisy(world.relationship_prototypes.row(s.label).transpose(),
                              world.noise_scale, rng);
    s.f_union = pair.head(world.union_dim);
    s.f_p1 = pair.segment(world.union_dim, world.person_dim);
    s.f_p2 = pair.tail(world.person_dim);
    s.geometry.resize(world.geometry_dim);
    for (int g = 0; g < world.geometry_dim; ++g) s.geometry(g) = quantize_micro(sym(rng));

    const auto& conf = world.confidence;
    for (int o = 0; o < objects; ++o) {
      if (unit(rng) < world.cooccurrence(s.label, o)) {
        Detection d;
        d.object = o;
        d.confidence = quantize_confidence(draw_beta(rng, conf.present_a, conf.present_b));
        const Vector look = world.object_prototypes.row(o).transpose() +
                            world.context_strength * world.context_prototypes.row(s.label).transpose();
        d.feature = noisy(look, world.noise_scale, rng);
        s.detections.push_back(std::move(d));
      } else if (unit(rng) < conf.clutter_rate) {
        Detection d;
        d.object = o;
        d.confidence = quantize_confidence(draw_beta(rng, conf.clutter_a, conf.clutter_b));
        // a false positive does not look like the object it is labelled as
        d.feature = noisy(Vector::Zero(world.feature_dim), world.noise_scale, rng);
        s.detections.push_back(std::move(d));
      }
    }
  }
  return data;
}

namespace {

void write_row(std::ostringstream& os, const char* tag, const Vector& v) {
  os << tag;
  for (Eigen::Index k = 0; k < v.size(); ++k) os << ' ' << text::fixed6(v(k));
  os << '\n';
}

void write_exact_rows(std::ostringstream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << text::exact(m(r, c));
    os << '\n';
  }
}

Vector read_row(text::LineReader& in, const char* tag, int length) {
  const auto tokens = text::split_ws(in.expect_line(tag));
  if (tokens.empty() || tokens[0] != tag) {
    throw in.error(std::string("expected '") + tag + "' row");
  }
  if (static_cast<int>(tokens.size()) != length + 1) {
    throw in.error(std::string(tag) + " row has " + std::to_string(tokens.size() - 1) +
                   " values, expected " + std::to_string(length));
  }
  Vector v(length);
  for (int k = 0; k < length; ++k) v(k) = in.parse_number<Real>(tokens[k + 1], tag);
  return v;
}

}  // namespace

std::string dataset_to_text(const Dataset& data, const WorldModel& world,
                            const std::string& provenance) {
  std::ostringstream os;
  os << "grm-dataset v1\n" << text::provenance_block(provenance);
  os << "dims " << world.union_dim << ' ' << world.person_dim << ' ' << world.geometry_dim
     << ' ' << world.feature_dim << ' ' << world.relationships() << ' ' << world.objects()
     << '\n';
  os << "samples " << data.size() << '\n';
  for (const auto& s : data) {
    os << "sample " << s.id << ' ' << s.label << ' ' << s.detections.size() << '\n';
    write_row(os, "u", s.f_union);
    write_row(os, "p1", s.f_p1);
    write_row(os, "p2", s.f_p2);
    write_row(os, "g", s.geometry);
    for (const auto& d : s.detections) {
      os << "det " << d.object << ' ' << text::fixed6(d.confidence);
      for (Eigen::Index k = 0; k < d.feature.size(); ++k) os << ' ' << text::fixed6(d.feature(k));
      os << '\n';
    }
  }
  os << "end\n";
  return os.str();
}

LoadedDataset dataset_from_text(const std::string& contents) {
  text::LineReader in(contents, "dataset");
  if (in.expect_line("header") != "grm-dataset v1") {
    throw in.error("expected header 'grm-dataset v1'");
  }
  LoadedDataset out;
  {
    const auto t = text::split_ws(in.expect_line("dims"));
    if (t.size() != 7 || t[0] != "dims") {
      throw in.error("expected 'dims <union> <person> <geometry> <feature> <M> <N>'");
    }
    out.union_dim = in.parse_number<int>(t[1], "union dim");
    out.person_dim = in.parse_number<int>(t[2], "person dim");
    out.geometry_dim = in.parse_number<int>(t[3], "geometry dim");
    out.feature_dim = in.parse_number<int>(t[4], "feature dim");
    out.relationships = in.parse_number<int>(t[5], "relationship count");
    out.objects = in.parse_number<int>(t[6], "object count");
    if (out.union_dim < 0 || out.person_dim < 0 || out.geometry_dim < 0 || out.feature_dim <= 0 ||
        out.relationships <= 0 || out.objects <= 0) {
      throw in.error("invalid dims");
    }
  }
  const auto t = text::split_ws(in.expect_line("samples"));
  if (t.size() != 2 || t[0] != "samples") throw in.error("expected 'samples <count>'");
  const long long count = in.parse_number<long long>(t[1], "sample count");
  if (count < 0) throw in.error("negative sample count");
  out.samples.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k) {
    const auto h = text::split_ws(in.expect_line("sample"));
    if (h.size() != 4 || h[0] != "sample") {
      throw in.error("expected 'sample <id> <label> <detections>'");
    }
    Sample s;
    s.id = in.parse_number<std::int64_t>(h[1], "sample id");
    s.label = in.parse_number<int>(h[2], "label");
    const int dets = in.parse_number<int>(h[3], "detection count");
    if (s.label < 0 || s.label >= out.relationships) {
      throw in.error("sample " + std::to_string(s.id) + " label out of range");
    }
    if (dets < 0) throw in.error("negative detection count");
    s.f_union = read_row(in, "u", out.union_dim);
    s.f_p1 = read_row(in, "p1", out.person_dim);
    s.f_p2 = read_row(in, "p2", out.person_dim);
    s.geometry = read_row(in, "g", out.geometry_dim);
    for (int j = 0; j < dets; ++j) {
      const auto d = text::split_ws(in.expect_line("det"));
      if (d.size() != static_cast<std::size_t>(out.feature_dim) + 3 || d[0] != "det") {
        throw in.error("expected 'det <object> <confidence> <" +
                       std::to_string(out.feature_dim) + " values>'");
      }
      Detection det;
      det.object = in.parse_number<int>(d[1], "object index");
      det.confidence = in.parse_number<Real>(d[2], "confidence");
      if (det.object < 0 || det.object >= out.objects) throw in.error("object index out of range");
      if (!(det.confidence >= 0 && det.confidence <= 1)) throw in.error("confidence outside [0,1]");
      det.feature.resize(out.feature_dim);
      for (int q = 0; q < out.feature_dim; ++q) {
        det.feature(q) = in.parse_number<Real>(d[q + 3], "feature");
      }
      s.detections.push_back(std::move(det));
    }
    out.samples.push_back(std::move(s));
  }
  if (in.expect_line("end marker") != "end") throw in.error("expected 'end'");
  std::string_view trailing;
  if (in.next(trailing)) throw in.error("content after 'end'");
  return out;
}

void save_dataset(const std::string& path, const Dataset& data, const WorldModel& world,
                  const std::string& provenance) {
  text::write_file(path, dataset_to_text(data, world, provenance));
}

LoadedDataset load_dataset(const std::string& path) {
  return dataset_from_text(text::read_file(path));
}

std::string world_to_text(const WorldModel& w, const std::string& provenance) {
  std::ostringstream os;
  os << "grm-world v1\n" << text::provenance_block(provenance);
  os << "relationships " << w.relationships() << '\n';
  for (const auto& name : w.relationship_names) os << name << '\n';
  os << "objects " << w.objects() << '\n';
  for (const auto& name : w.object_names) os << name << '\n';
  os << "dims " << w.union_dim << ' ' << w.person_dim << ' ' << w.geometry_dim << ' '
     << w.feature_dim << '\n';
  os << "noise " << text::exact(w.noise_scale) << '\n';
  os << "context " << text::exact(w.context_strength) << '\n';
  const auto& c = w.confidence;
  os << "confidence " << text::exact(c.present_a) << ' ' << text::exact(c.present_b) << ' '
     << text::exact(c.clutter_rate) << ' ' << text::exact(c.clutter_a) << ' '
     << text::exact(c.clutter_b) << '\n';
  os << "cooccurrence\n";
  write_exact_rows(os, w.cooccurrence);
  os << "relationship_prototypes\n";
  write_exact_rows(os, w.relationship_prototypes);
  os << "object_prototypes\n";
  write_exact_rows(os, w.object_prototypes);
  os << "context_prototypes\n";
  write_exact_rows(os, w.context_prototypes);
  os << "end\n";
  return os.str();
}

WorldModel world_from_text(const std::string& contents) {
  text::LineReader in(contents, "world");
  if (in.expect_line("header") != "grm-world v1") throw in.error("expected 'grm-world v1'");
  WorldModel w;
  auto keyed = [&](const char* key, std::size_t values) {
    auto t = text::split_ws(in.expect_line(key));
    if (t.size() != values + 1 || t[0] != key) throw in.error(std::string("expected '") + key + "'");
    return t;
  };
  auto names = [&](const char* key) {
    const auto t = keyed(key, 1);
    const int n = in.parse_number<int>(t[1], key);
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.emplace_back(in.expect_line(key));
    return out;
  };
  w.relationship_names = names("relationships");
  w.object_names = names("objects");
  {
    const auto t = keyed("dims", 4);
    w.union_dim = in.parse_number<int>(t[1], "union dim");
    w.person_dim = in.parse_number<int>(t[2], "person dim");
    w.geometry_dim = in.parse_number<int>(t[3], "geometry dim");
    w.feature_dim = in.parse_number<int>(t[4], "feature dim");
  }
  w.noise_scale = in.parse_number<Real>(keyed("noise", 1)[1], "noise");
  w.context_strength = in.parse_number<Real>(keyed("context", 1)[1], "context");
  {
    const auto t = keyed("confidence", 5);
    w.confidence.present_a = in.parse_number<Real>(t[1], "confidence");
    w.confidence.present_b = in.parse_number<Real>(t[2], "confidence");
    w.confidence.clutter_rate = in.parse_number<Real>(t[3], "confidence");
    w.confidence.clutter_a = in.parse_number<Real>(t[4], "confidence");
    w.confidence.clutter_b = in.parse_number<Real>(t[5], "confidence");
  }
  auto matrix = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    keyed(key, 0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto t = text::split_ws(in.expect_line(key));
      if (static_cast<Eigen::Index>(t.size()) != cols) throw in.error(std::string("bad ") + key + " row");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.parse_number<Real>(t[c], key);
    }
    return m;
  };
  const auto m = static_cast<Eigen::Index>(w.relationship_names.size());
  const auto n = static_cast<Eigen::Index>(w.object_names.size());
  w.cooccurrence = matrix("cooccurrence", m, n);
  w.relationship_prototypes =
      matrix("relationship_prototypes", m, w.union_dim + 2 * w.person_dim);
  w.object_prototypes = matrix("object_prototypes", n, w.feature_dim);
  w.context_prototypes = matrix("context_prototypes", m, w.feature_dim);
  if (in.expect_line("end marker") != "end") throw in.error("expected 'end'");
  validate(w);
  return w;
}

}  // namespace grm
