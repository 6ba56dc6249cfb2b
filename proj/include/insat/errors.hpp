#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace insat
{

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error
{
  using Error::Error;
};

// Thrust vector vanishes or points below the horizon; roll/pitch are undefined.
struct UndefinedAttitude : Error
{
  using Error::Error;
};

// Body rate requested with thrust-per-mass below the configured floor.
struct RateSingularity : Error
{
  using Error::Error;
};

struct InfeasibleQp : Error
{
  using Error::Error;
};

struct Discontinuity : Error
{
  using Error::Error;
};

struct OutOfBounds : Error
{
  using Error::Error;
};

struct ParseError : Error
{
  ParseError(const std::string& what, std::size_t byte_offset)
    : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset(byte_offset)
  {
  }
  std::size_t offset;
};

struct VersionError : Error
{
  using Error::Error;
};

}  // namespace insat
