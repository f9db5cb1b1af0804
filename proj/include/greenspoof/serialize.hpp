#pragma once

// Little-endian primitives for the model container.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "greenspoof/classifiers.hpp"

namespace greenspoof {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void f64s(const std::vector<double>& v);
  void matrix(const RowMatrix& m);
  void vector(const Eigen::VectorXd& v);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::vector<double> f64s();
  RowMatrix matrix();
  Eigen::VectorXd vector();

 private:
  void raw(char* dst, std::size_t n);
  std::istream& in_;
};

}  // namespace greenspoof
