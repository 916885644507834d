#pragma once

#include <stdexcept>
#include <string>

namespace graff {

/// Base class for all library errors. `id()` is a stable machine-readable
/// identifier ("RankDeficient", "DimensionMismatch", ...) that the CLI
/// forwards to stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string id, const std::string& what)
      : std::runtime_error(what), id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

#define GRAFF_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  }

GRAFF_DEFINE_ERROR(RankDeficient);
GRAFF_DEFINE_ERROR(DimensionMismatch);
GRAFF_DEFINE_ERROR(InvalidFeaturePair);
GRAFF_DEFINE_ERROR(MixedAmbientDims);
GRAFF_DEFINE_ERROR(EmptyInput);
GRAFF_DEFINE_ERROR(EmptyInlierSet);
GRAFF_DEFINE_ERROR(QueueOverflow);
GRAFF_DEFINE_ERROR(DegenerateSegment);
GRAFF_DEFINE_ERROR(ZeroVector);
GRAFF_DEFINE_ERROR(PathThroughZero);
GRAFF_DEFINE_ERROR(SchemaError);
GRAFF_DEFINE_ERROR(ConfigError);

#undef GRAFF_DEFINE_ERROR

}  // namespace graff
