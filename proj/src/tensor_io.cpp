#include "rrdee/tensor_io.hpp"

#include <cstring>
#include <fstream>

#include "rrdee/corpus.hpp"

namespace rrdee {

namespace {
constexpr char kMagic[8] = {'R', 'R', 'D', 'E', 'E', 'C', '0', '1'};
}

NamedArray NamedArray::from_matrix(const std::string& name, const Eigen::MatrixXd& m) {
  NamedArray a;
  a.name = name;
  a.shape = {m.rows(), m.cols()};
  a.data.resize(static_cast<size_t>(m.size()));
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      a.data[static_cast<size_t>(r * m.cols() + c)] = m(r, c);
    }
  }
  return a;
}

Eigen::MatrixXd NamedArray::to_matrix() const {
  if (shape.size() != 2) {
    throw DataError("array " + name + " is not a matrix");
  }
  Eigen::MatrixXd m(shape[0], shape[1]);
  for (long r = 0; r < shape[0]; ++r) {
    for (long c = 0; c < shape[1]; ++c) {
      m(r, c) = data[static_cast<size_t>(r * shape[1] + c)];
    }
  }
  return m;
}

const NamedArray& Container::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw DataError("container has no array named " + name);
}

void save_container(const std::string& path, const Container& c) {
  nlohmann::ordered_json header = c.meta;
  nlohmann::ordered_json arrs = nlohmann::ordered_json::array();
  for (const auto& a : c.arrays) {
    arrs.push_back({{"name", a.name}, {"shape", a.shape}});
  }
  header["arrays"] = arrs;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write container: " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& a : c.arrays) {
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path);
}

Container load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open container: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a container file: " + path);
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw DataError("truncated container header: " + path);

  Container c;
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("container header in " + path + ": " + e.what());
  }
  for (const auto& spec : header["arrays"]) {
    NamedArray a;
    a.name = spec["name"].get<std::string>();
    a.shape = spec["shape"].get<std::vector<long>>();
    size_t count = 1;
    for (long d : a.shape) count *= static_cast<size_t>(d);
    a.data.resize(count);
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw DataError("truncated array " + a.name + " in " + path);
    c.arrays.push_back(std::move(a));
  }
  header.erase("arrays");
  c.meta = header;
  return c;
}

}  // namespace rrdee
