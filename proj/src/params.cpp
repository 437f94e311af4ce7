#include "grm/params.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace grm {

std::string_view to_string(OptimizerTag tag) {
  return tag == OptimizerTag::kAdam ? "adam" : "sgd";
}

OptimizerTag parse_optimizer_tag(std::string_view text) {
  if (text == "adam") return OptimizerTag::kAdam;
  if (text == "sgd") return OptimizerTag::kSgd;
  throw ParseError("unknown optimizer tag '" + std::string(text) + "'");
}

namespace {

bool valid_identifier(std::string_view name) {
  return !name.empty() && std::none_of(name.begin(), name.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '/';
  });
}

}  // namespace

ParamGroup::ParamGroup(std::string name, OptimizerTag tag) : name_(std::move(name)), tag_(tag) {
  if (!valid_identifier(name_)) {
    throw ValidationError("invalid parameter group name '" + name_ + "'");
  }
}

void ParamGroup::add(std::string name, Matrix value) {
  if (!valid_identifier(name)) {
    throw ValidationError("invalid tensor name '" + name + "' in group " + name_);
  }
  if (contains(name)) {
    throw ValidationError("duplicate tensor '" + name + "' in group " + name_);
  }
  entries_.push_back({std::move(name), std::move(value)});
}

Matrix& ParamGroup::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw IndexError("no tensor '" + std::string(name) + "' in group " + name_);
}

const Matrix& ParamGroup::at(std::string_view name) const {
  return const_cast<ParamGroup*>(this)->at(name);
}

bool ParamGroup::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.name == name; });
}

Eigen::Index ParamGroup::scalar_count() const {
  Eigen::Index n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

bool ParamGroup::operator==(const ParamGroup& other) const {
  if (name_ != other.name_ || tag_ != other.tag_ || entries_.size() != other.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (a.value.size() > 0 &&
        std::memcmp(a.value.data(), b.value.data(), sizeof(Real) * a.value.size()) != 0) {
      return false;
    }
  }
  return true;
}

ParamGroup& ParamSet::add_group(std::string name, OptimizerTag tag) {
  if (has_group(name)) {
    throw ValidationError("duplicate parameter group '" + name + "'");
  }
  return groups_.emplace_back(std::move(name), tag);
}

ParamGroup& ParamSet::group(std::string_view name) {
  for (auto& g : groups_) {
    if (g.name() == name) return g;
  }
  throw IndexError("no parameter group '" + std::string(name) + "'");
}

const ParamGroup& ParamSet::group(std::string_view name) const {
  return const_cast<ParamSet*>(this)->group(name);
}

bool ParamSet::has_group(std::string_view name) const {
  return std::any_of(groups_.begin(), groups_.end(),
                     [&](const ParamGroup& g) { return g.name() == name; });
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.set_zero();
  return out;
}

void ParamSet::set_zero() {
  for (auto& g : groups_) {
    for (auto& e : g.entries()) e.value.setZero();
  }
}

void require_same_layout(const ParamSet& a, const ParamSet& b, std::string_view what) {
  const auto ga = a.groups();
  const auto gb = b.groups();
  if (ga.size() != gb.size()) {
    throw ShapeError(std::string(what) + ": group count " + std::to_string(ga.size()) + " vs " +
                     std::to_string(gb.size()));
  }
  for (std::size_t i = 0; i < ga.size(); ++i) {
    const auto ea = ga[i].entries();
    const auto eb = gb[i].entries();
    if (ga[i].name() != gb[i].name() || ea.size() != eb.size()) {
      throw ShapeError(std::string(what) + ": group " + ga[i].name() + " vs " + gb[i].name());
    }
    for (std::size_t j = 0; j < ea.size(); ++j) {
      if (ea[j].name != eb[j].name || ea[j].value.rows() != eb[j].value.rows() ||
          ea[j].value.cols() != eb[j].value.cols()) {
        throw ShapeError(std::string(what) + ": " + ga[i].name() + "/" + ea[j].name + " " +
                         shape_of(ea[j].value) + " vs " + eb[j].name + " " +
                         shape_of(eb[j].value));
      }
    }
  }
}

void ParamSet::add_scaled(const ParamSet& other, Real scale) {
  require_same_layout(*this, other, "add_scaled");
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    auto dst = groups_[i].entries();
    const auto src = other.groups_[i].entries();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j].value += scale * src[j].value;
  }
}

void ParamSet::scale(Real factor) {
  for (auto& g : groups_) {
    for (auto& e : g.entries()) e.value *= factor;
  }
}

bool ParamSet::all_finite() const {
  for (const auto& g : groups_) {
    for (const auto& e : g.entries()) {
      if (!e.value.allFinite()) return false;
    }
  }
  return true;
}

Eigen::Index ParamSet::scalar_count() const {
  Eigen::Index n = 0;
  for (const auto& g : groups_) n += g.scalar_count();
  return n;
}

bool ParamSet::operator==(const ParamSet& other) const { return groups_ == other.groups_; }

GradCheckResult grad_check(const DifferentiableFn& fn, ParamSet params, Real step) {
  if (!(step > 0)) {
    throw ValidationError("grad_check: step must be positive");
  }
  ParamSet analytic = params.zeros_like();
  const Real base = fn(params, &analytic);
  if (!std::isfinite(base)) {
    throw std::runtime_error("grad_check: non-finite loss at the base point");
  }

  GradCheckResult result;
  auto groups = params.groups();
  const auto agroups = analytic.groups();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto entries = groups[gi].entries();
    const auto aentries = agroups[gi].entries();
    for (std::size_t ei = 0; ei < entries.size(); ++ei) {
      Matrix& value = entries[ei].value;
      for (Eigen::Index r = 0; r < value.rows(); ++r) {
        for (Eigen::Index c = 0; c < value.cols(); ++c) {
          const auto label = [&] {
            return groups[gi].name() + "/" + entries[ei].name + "[" + std::to_string(r) + "," +
                   std::to_string(c) + "]";
          };
          const Real saved = value(r, c);
          value(r, c) = saved + step;
          const Real plus = fn(params, nullptr);
          value(r, c) = saved - step;
          const Real minus = fn(params, nullptr);
          value(r, c) = saved;
          if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw std::runtime_error("grad_check: non-finite loss when perturbing " + label());
          }
          const Real numeric = (plus - minus) / (2 * step);
          const Real exact = aentries[ei].value(r, c);
          const Real denom = std::max({std::abs(exact), std::abs(numeric), Real(1e-8)});
          const Real err = std::abs(exact - numeric) / denom;
          ++result.checked;
          if (err > result.max_relative_error || result.worst_entry.empty()) {
            result.max_relative_error = err;
            result.worst_entry = label();
          }
        }
      }
    }
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'G', 'R', 'M', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (pos > bytes.size() || bytes.size() - pos < sizeof(U)) {
    throw ParseError(std::string("checkpoint truncated while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::string encode_checkpoint(const ParamSet& params, const std::string& provenance) {
  std::ostringstream header;
  std::istringstream prov(provenance);
  for (std::string line; std::getline(prov, line);) header << "# " << line << '\n';
  header << "groups " << params.groups().size() << '\n';
  for (const auto& g : params.groups()) {
    header << "group " << g.name() << ' ' << to_string(g.optimizer()) << ' '
           << g.entries().size() << '\n';
    for (const auto& e : g.entries()) {
      header << "tensor " << e.name << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
    }
  }
  const std::string text = header.str();

  std::string out(kMagic, sizeof(kMagic));
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  for (const auto& g : params.groups()) {
    for (const auto& e : g.entries()) {
      // Matrix is row-major, so storage order is the payload order.
      for (Eigen::Index k = 0; k < e.value.size(); ++k) put_le(out, e.value.data()[k]);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, pos, "header length");
  if (bytes.size() - pos < header_len) {
    throw ParseError("checkpoint truncated inside header");
  }
  std::istringstream header(std::string(bytes.substr(pos, header_len)));
  pos += header_len;

  Checkpoint ck;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("checkpoint header line " + std::to_string(line_no) + ": " + msg);
  };
  std::size_t group_count = 0;
  bool have_groups = false;
  while (std::getline(header, line)) {
    ++line_no;
    if (line.rfind("# ", 0) == 0) {
      ck.provenance += line.substr(2) + "\n";
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key != "groups" || !(ls >> group_count)) throw fail("expected 'groups <count>'");
    have_groups = true;
    break;
  }
  if (!have_groups) throw fail("missing groups line");

  for (std::size_t gi = 0; gi < group_count; ++gi) {
    ++line_no;
    if (!std::getline(header, line)) throw fail("missing group line");
    std::istringstream ls(line);
    std::string key, name, tag;
    std::size_t count = 0;
    if (!(ls >> key >> name >> tag >> count) || key != "group") {
      throw fail("expected 'group <name> <optimizer> <count>'");
    }
    auto& group = ck.params.add_group(name, parse_optimizer_tag(tag));
    for (std::size_t ti = 0; ti < count; ++ti) {
      ++line_no;
      if (!std::getline(header, line)) throw fail("missing tensor line");
      std::istringstream ts(line);
      std::string tkey, tname;
      long long rows = -1, cols = -1;
      if (!(ts >> tkey >> tname >> rows >> cols) || tkey != "tensor" || rows < 0 || cols < 0) {
        throw fail("expected 'tensor <name> <rows> <cols>'");
      }
      Matrix value(rows, cols);
      if ((bytes.size() - pos) / sizeof(Real) < static_cast<std::size_t>(value.size())) {
        throw ParseError("checkpoint truncated in payload of " + name + "/" + tname);
      }
      for (Eigen::Index k = 0; k < value.size(); ++k) {
        value.data()[k] = get_le<Real>(bytes, pos, "payload");
      }
      group.add(tname, std::move(value));
    }
  }
  if (pos != bytes.size()) {
    throw ParseError("checkpoint: " + std::to_string(bytes.size() - pos) + " trailing bytes");
  }
  return ck;
}

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::string bytes = encode_checkpoint(params, provenance);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace grm
