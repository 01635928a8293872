#include "adamf/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "adamf/errors.hpp"
#include "adamf/io.hpp"

namespace adamf {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  float f32() { return read<float>(); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IoError("checkpoint truncated at byte " + std::to_string(pos_));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_section(Writer& w, const ParameterStore& params, const Tensor& (*pick)(const Parameter&)) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.parameters()) {
    const Tensor& t = pick(p);
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) w.f32(static_cast<float>(v));
  }
}

void read_section(Reader& r, ParameterStore& params, Tensor& (*pick)(Parameter&)) {
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw ContractViolation("checkpoint holds " + std::to_string(count) +
                            " parameters, configuration expects " + std::to_string(params.size()));
  }
  for (auto& p : params.parameters()) {
    const std::uint32_t name_len = r.u32();
    if (name_len > 4096) throw IoError("checkpoint corrupt: implausible name length");
    const std::string name(r.bytes(name_len));
    if (name != p.name) {
      throw ContractViolation("checkpoint tensor " + name + " found where " + p.name +
                              " was expected");
    }
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw IoError("checkpoint corrupt: implausible rank for " + name);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    Tensor& t = pick(p);
    if (shape != t.shape) {
      throw ContractViolation("checkpoint tensor " + name + " has shape " + shape_string(shape) +
                              ", configuration expects " + t.shape_string());
    }
    for (auto& v : t.data) v = static_cast<double>(r.f32());
  }
}

const Tensor& value_of(const Parameter& p) { return p.value; }
const Tensor& first_of(const Parameter& p) { return p.adam.first_moment; }
const Tensor& second_of(const Parameter& p) { return p.adam.second_moment; }
Tensor& value_of_mut(Parameter& p) { return p.value; }
Tensor& first_of_mut(Parameter& p) { return p.adam.first_moment; }
Tensor& second_of_mut(Parameter& p) { return p.adam.second_moment; }

}  // namespace

std::string serialize_checkpoint(const ParameterStore& params) {
  Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_section(w, params, value_of);
  write_section(w, params, first_of);
  write_section(w, params, second_of);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.parameters()) w.u64(p.adam.step);
  return w.take();
}

void deserialize_checkpoint(std::string_view bytes, ParameterStore& params) {
  Reader r(bytes);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw IoError("not a checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  // Decode into a copy so a failure leaves the caller's store untouched.
  ParameterStore staged = params;
  read_section(r, staged, value_of_mut);
  read_section(r, staged, first_of_mut);
  read_section(r, staged, second_of_mut);
  if (r.u32() != staged.size()) throw IoError("checkpoint corrupt: step section count");
  for (auto& p : staged.parameters()) p.adam.step = r.u64();
  if (!r.done()) throw IoError("checkpoint corrupt: trailing bytes");
  for (auto& p : staged.parameters()) {
    if (!p.value.all_finite()) throw IoError("checkpoint corrupt: non-finite values in " + p.name);
  }
  params = std::move(staged);
}

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(params));
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& params) {
  deserialize_checkpoint(read_file(path), params);
}

void round_to_checkpoint_precision(ParameterStore& params) {
  for (auto& p : params.parameters()) {
    for (auto* t : {&p.value, &p.adam.first_moment, &p.adam.second_moment}) {
      for (auto& v : t->data) v = static_cast<double>(static_cast<float>(v));
    }
  }
}

}  // namespace adamf
