#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gatedgan {

// Every failure carries a stable machine-readable class name; the CLI prints
// it as the first token of its one-line error report.
class Error : public std::runtime_error {
 public:
  Error(std::string_view error_class, const std::string& message)
      : std::runtime_error(message), class_(error_class) {}

  std::string_view error_class() const noexcept { return class_; }

 private:
  std::string_view class_;
};

#define GATEDGAN_ERROR_TYPE(Name, tag)                        \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& message)                 \
        : Error(tag, message) {}                              \
  };

GATEDGAN_ERROR_TYPE(ShapeError, "shape_mismatch")
GATEDGAN_ERROR_TYPE(IndexError, "index_out_of_range")
GATEDGAN_ERROR_TYPE(ArgumentError, "invalid_argument")
GATEDGAN_ERROR_TYPE(NumericError, "non_finite")
GATEDGAN_ERROR_TYPE(IoError, "io_error")
GATEDGAN_ERROR_TYPE(DecodeError, "decode_error")
GATEDGAN_ERROR_TYPE(FormatError, "unsupported_format")
GATEDGAN_ERROR_TYPE(ChecksumError, "checksum_mismatch")
GATEDGAN_ERROR_TYPE(VersionError, "version_mismatch")
GATEDGAN_ERROR_TYPE(ConfigError, "config_error")
GATEDGAN_ERROR_TYPE(DatasetError, "dataset_error")

#undef GATEDGAN_ERROR_TYPE

}  // namespace gatedgan
