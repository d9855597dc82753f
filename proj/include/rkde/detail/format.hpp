#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace rkde::detail {

// Shortest round-trip decimal form of a double. Deterministic: same bits in,
// same characters out, independent of locale and stream state.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

}  // namespace rkde::detail
