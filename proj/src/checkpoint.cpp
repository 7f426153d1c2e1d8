#include "metawsd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "metawsd/corpus_io.hpp"

namespace metawsd {

namespace {

constexpr char kMagic[4] = {'M', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw std::invalid_argument("checkpoint: string too long");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    unsigned char b[sizeof(T)];
    read(reinterpret_cast<char*>(b), sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint16_t>(what);
    std::string s(n, '\0');
    read(s.data(), n, what);
    return s;
  }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("offset " + std::to_string(offset_) + ": truncated checkpoint while reading " + what);
    }
    offset_ += n;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put_string(out, ckpt.method);
  put<std::uint64_t>(out, ckpt.seed);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(ckpt.activation));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const Matrix& m : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.senses.size()));
  for (const SenseKey& k : ckpt.senses) {
    put_string(out, k.word);
    put_string(out, k.sense);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.read(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("offset 0: bad magic bytes, expected \"MWCK\"");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw FormatError("offset 4: unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.method = r.get_string("method");
  c.seed = r.get<std::uint64_t>("seed");
  const auto act = r.get<std::uint8_t>("activation");
  if (act > static_cast<std::uint8_t>(Activation::relu)) {
    throw FormatError("offset " + std::to_string(r.offset() - 1) + ": bad activation code");
  }
  c.activation = static_cast<Activation>(act);
  const auto n = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t t = 0; t < n; ++t) {
    const auto rows = r.get<std::uint32_t>("tensor rows");
    const auto cols = r.get<std::uint32_t>("tensor cols");
    Matrix m(rows, cols);
    for (double& v : m.data()) v = std::bit_cast<double>(r.get<std::uint64_t>("tensor data"));
    c.tensors.push_back(std::move(m));
  }
  const auto ns = r.get<std::uint32_t>("sense count");
  for (std::uint32_t i = 0; i < ns; ++i) {
    SenseKey k;
    k.word = r.get_string("sense word");
    k.sense = r.get_string("sense id");
    c.senses.push_back(std::move(k));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("offset " + std::to_string(r.offset()) + ": trailing bytes after checkpoint");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace metawsd
