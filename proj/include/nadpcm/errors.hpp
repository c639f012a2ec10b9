#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nadpcm {

/// Input bytes that cannot be interpreted as PCM/WAV audio.
class MalformedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A codec bitstream that fails structural validation. Carries the index of
/// the frame being read when the problem was found, if any.
class MalformedBitstream : public std::runtime_error {
 public:
  explicit MalformedBitstream(const std::string& what,
                              std::optional<std::size_t> frame = std::nullopt)
      : std::runtime_error(frame ? what + " (frame " + std::to_string(*frame) + ")"
                                 : what),
        frame_(frame) {}

  std::optional<std::size_t> frame() const noexcept { return frame_; }

 private:
  std::optional<std::size_t> frame_;
};

}  // namespace nadpcm
