// Copyright 2026 The edgebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EDGEBENCH_SECRET_H_
#define EDGEBENCH_SECRET_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgebench {

class SecretEncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Standard base64 (RFC 4648, with padding). This is obfuscation of the
// descriptor password on disk, not protection.
std::string encode_secret(std::string_view plain);

// Throws SecretEncodingError on characters outside the alphabet, bad
// padding, or a length that is not a multiple of four.
std::string decode_secret(std::string_view encoded);

// A descriptor password. Held decoded in memory. A value that is not valid
// base64 (for instance the `<ENCODED_PASSWORD>` placeholder) is kept
// verbatim and flagged so that it serializes back unchanged.
class Secret {
 public:
  Secret() = default;

  static Secret from_plain(std::string plain);
  static Secret from_encoded(std::string_view encoded);

  const std::string& plain() const { return value_; }
  bool is_placeholder() const { return placeholder_; }
  std::string encoded() const;

  friend bool operator==(const Secret&, const Secret&) = default;

 private:
  std::string value_;
  bool placeholder_ = false;
};

}  // namespace edgebench

#endif  // EDGEBENCH_SECRET_H_
