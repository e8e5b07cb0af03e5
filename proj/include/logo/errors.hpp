#pragma once
// Error types shared across the library. Everything derives from logo::Error
// so callers can catch the whole family at the CLI boundary.

#include <stdexcept>
#include <string>

namespace logo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// file / parsing
struct IoError : Error { using Error::Error; };
struct MalformedLine : Error { using Error::Error; };
struct UnknownId : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// numeric kernel
struct ShapeMismatch : Error { using Error::Error; };
struct ZeroExtent : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

// event data model
struct AlreadyAugmented : Error { using Error::Error; };

// model / training
struct UnknownVariant : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };

// evaluation
struct GoldFiltered : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };

// dataset construction
struct DimensionTooLarge : Error { using Error::Error; };
struct EmptyTrain : Error { using Error::Error; };

// extraction
struct MissingParent : Error { using Error::Error; };
struct NoChildren : Error { using Error::Error; };
struct TransportFailure : Error { using Error::Error; };
struct MalformedJudgement : Error { using Error::Error; };

}  // namespace logo
