#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

// CSV emission (comma-separated, '.' decimal, header row, LF endings,
// doubles at 17 significant digits), atomic file writes (temp then rename)
// and the FNV-1a digest used by manifests to pin outputs.

namespace stlab {

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) os_ << ',';
      os_ << columns[i];
    }
    os_ << '\n';
    cols_ = columns.size();
  }

  void field(double x) { cell(format_g17(x)); }
  void field(uint64_t x) { cell(std::to_string(x)); }
  void field(int x) { cell(std::to_string(x)); }
  void field(const std::string& s) { cell(s); }

  template <typename... Ts>
  void row(const Ts&... ts) {
    (field(ts), ...);
    end_row();
  }

  std::string str() const { return os_.str(); }

 private:
  void cell(const std::string& s) {
    if (in_row_) os_ << ',';
    os_ << s;
    in_row_ = true;
    ++filled_;
  }
  void end_row() {
    os_ << '\n';
    in_row_ = false;
    filled_ = 0;
  }

  std::ostringstream os_;
  std::size_t cols_ = 0;
  std::size_t filled_ = 0;
  bool in_row_ = false;
};

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("write_file_atomic: write failed: " + path);
  }
  fs::rename(tmp, p);
}

inline uint64_t fnv1a(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("fnv1a_file: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return fnv1a(os.str());
}

}  // namespace stlab
