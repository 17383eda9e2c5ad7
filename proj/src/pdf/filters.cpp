#include "filters.hpp"

#include <zlib.h>

#include <cstdlib>
#include <vector>

namespace dqa::pdf {

namespace {

std::int64_t param_int(const DictData* params, std::string_view key, std::int64_t fallback) {
  if (!params) return fallback;
  const Object* o = params->find(key);
  if (!o) return fallback;
  if (auto i = o->integer()) return *i;
  return fallback;
}

std::string undo_predictor(std::string data, const DictData* params, std::int64_t offset) {
  const std::int64_t predictor = param_int(params, "Predictor", 1);
  if (predictor == 1) return data;
  const std::int64_t colors = param_int(params, "Colors", 1);
  const std::int64_t bpc = param_int(params, "BitsPerComponent", 8);
  const std::int64_t columns = param_int(params, "Columns", 1);
  if (colors < 1 || colors > 32 || columns < 1 || columns > (1 << 24) ||
      (bpc != 1 && bpc != 2 && bpc != 4 && bpc != 8 && bpc != 16)) {
    throw MalformedPdf("bad predictor parameters", offset);
  }
  const std::size_t bpp = static_cast<std::size_t>(std::max<std::int64_t>(1, colors * bpc / 8));
  const std::size_t row_len = static_cast<std::size_t>((colors * bpc * columns + 7) / 8);

  if (predictor == 2) {
    if (bpc != 8) throw UnsupportedPdf("TIFF predictor with non-8-bit components", offset);
    for (std::size_t row = 0; row + row_len <= data.size(); row += row_len) {
      for (std::size_t i = bpp; i < row_len; ++i) {
        data[row + i] = static_cast<char>(data[row + i] + data[row + i - bpp]);
      }
    }
    return data;
  }
  if (predictor < 10 || predictor > 15) throw UnsupportedPdf("unknown predictor", offset);

  std::string out;
  out.reserve(data.size());
  std::vector<unsigned char> prev(row_len, 0), cur(row_len, 0);
  std::size_t pos = 0;
  while (pos < data.size()) {
    const int type = static_cast<unsigned char>(data[pos++]);
    const std::size_t n = std::min(row_len, data.size() - pos);
    for (std::size_t i = 0; i < row_len; ++i) {
      cur[i] = i < n ? static_cast<unsigned char>(data[pos + i]) : 0;
    }
    pos += n;
    for (std::size_t i = 0; i < row_len; ++i) {
      const unsigned left = i >= bpp ? cur[i - bpp] : 0;
      const unsigned up = prev[i];
      const unsigned up_left = i >= bpp ? prev[i - bpp] : 0;
      switch (type) {
        case 0: break;
        case 1: cur[i] = static_cast<unsigned char>(cur[i] + left); break;
        case 2: cur[i] = static_cast<unsigned char>(cur[i] + up); break;
        case 3: cur[i] = static_cast<unsigned char>(cur[i] + ((left + up) >> 1)); break;
        case 4: {
          const int p = static_cast<int>(left + up) - static_cast<int>(up_left);
          const int pa = std::abs(p - static_cast<int>(left));
          const int pb = std::abs(p - static_cast<int>(up));
          const int pc = std::abs(p - static_cast<int>(up_left));
          const unsigned pred = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
          cur[i] = static_cast<unsigned char>(cur[i] + pred);
          break;
        }
        default:
          throw MalformedPdf("bad PNG predictor row type", offset);
      }
    }
    out.append(reinterpret_cast<const char*>(cur.data()), n);
    std::swap(prev, cur);
  }
  return out;
}

std::string ascii_hex(std::string_view data, std::int64_t offset) {
  std::string out;
  int pending = -1;
  for (char c : data) {
    if (c == '>') break;
    if (is_whitespace(c)) continue;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw MalformedPdf("bad ASCIIHex digit", offset);
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<char>((pending << 4) | v));
      pending = -1;
    }
  }
  if (pending >= 0) out.push_back(static_cast<char>(pending << 4));
  return out;
}

std::string ascii85(std::string_view data, std::int64_t offset) {
  std::string out;
  std::uint32_t group[5];
  int n = 0;
  auto flush = [&](int count) {
    std::uint64_t value = 0;
    for (int i = 0; i < 5; ++i) value = value * 85 + (i < count ? group[i] : 84);
    if (value > UINT32_MAX) throw MalformedPdf("ASCII85 group overflow", offset);
    for (int i = 0; i < count - 1; ++i) {
      out.push_back(static_cast<char>((value >> (24 - 8 * i)) & 0xFF));
    }
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (is_whitespace(c)) continue;
    if (c == '~') break;
    if (c == 'z' && n == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw MalformedPdf("bad ASCII85 character", offset);
    group[n++] = static_cast<std::uint32_t>(c - '!');
    if (n == 5) {
      flush(5);
      n = 0;
    }
  }
  if (n == 1) throw MalformedPdf("truncated ASCII85 group", offset);
  if (n > 1) flush(n);
  return out;
}

}  // namespace

std::string inflate(std::string_view data, std::size_t max_bytes, std::int64_t offset) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw MalformedPdf("zlib init failed", offset);
  std::string out;
  char buf[16384];
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    ret = ::inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END && ret != Z_BUF_ERROR) {
      inflateEnd(&zs);
      // Many writers emit a truncated or checksum-less tail; keep what decoded.
      if (!out.empty() && ret == Z_DATA_ERROR) return out;
      throw MalformedPdf("corrupt FlateDecode stream", offset);
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (out.size() > max_bytes) {
      inflateEnd(&zs);
      throw UnsupportedPdf("decoded stream exceeds size limit", offset);
    }
    if (ret == Z_BUF_ERROR || (zs.avail_in == 0 && zs.avail_out != 0 && ret != Z_STREAM_END)) {
      break;  // input exhausted without an end marker
    }
  }
  inflateEnd(&zs);
  return out;
}

std::string apply_filter(std::string_view data, const FilterStep& step, std::size_t max_bytes,
                         std::int64_t offset) {
  const std::string& f = step.name;
  if (f == "FlateDecode" || f == "Fl") {
    return undo_predictor(inflate(data, max_bytes, offset), step.params, offset);
  }
  if (f == "ASCIIHexDecode" || f == "AHx") return ascii_hex(data, offset);
  if (f == "ASCII85Decode" || f == "A85") return ascii85(data, offset);
  throw UnsupportedPdf("unsupported filter /" + f, offset);
}

}  // namespace dqa::pdf
