#pragma once

#include <stdexcept>
#include <string>

namespace svs {

// Config or input failed validation; the message names the offending field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad request against the cloud tier (unknown table, inverted range, ...).
class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A perception stage failed on one batch. The pipeline skips the batch and
// bumps a drop counter instead of tearing down.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& what, int camera_id, long batch_index)
      : std::runtime_error(what + " (camera " + std::to_string(camera_id) +
                           ", batch " + std::to_string(batch_index) + ")"),
        camera_id(camera_id),
        batch_index(batch_index) {}

  int camera_id;
  long batch_index;
};

}  // namespace svs
