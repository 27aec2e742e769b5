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

#include "edgebench/secret.h"

#include <openssl/evp.h>

#include <string>
#include <vector>

namespace edgebench {
namespace {

bool is_alphabet(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '+' || c == '/';
}

}  // namespace

std::string encode_secret(std::string_view plain) {
  if (plain.empty()) return {};
  std::vector<unsigned char> out(4 * ((plain.size() + 2) / 3) + 1);
  const int n = EVP_EncodeBlock(
      out.data(), reinterpret_cast<const unsigned char*>(plain.data()),
      static_cast<int>(plain.size()));
  return std::string(reinterpret_cast<const char*>(out.data()),
                     static_cast<std::size_t>(n));
}

std::string decode_secret(std::string_view encoded) {
  if (encoded.empty()) return {};
  if (encoded.size() % 4 != 0) {
    throw SecretEncodingError("base64 length is not a multiple of 4");
  }
  // EVP_DecodeBlock tolerates whitespace and does not report padding, so the
  // strict shape check happens here.
  std::size_t pad = 0;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    const char c = encoded[i];
    if (c == '=') {
      if (i + 2 < encoded.size()) {
        throw SecretEncodingError("misplaced base64 padding");
      }
      ++pad;
      continue;
    }
    if (pad > 0) throw SecretEncodingError("data after base64 padding");
    if (!is_alphabet(c)) {
      throw SecretEncodingError(std::string("invalid base64 character '") + c +
                                "'");
    }
  }
  std::vector<unsigned char> out(3 * (encoded.size() / 4) + 1);
  const int n = EVP_DecodeBlock(
      out.data(), reinterpret_cast<const unsigned char*>(encoded.data()),
      static_cast<int>(encoded.size()));
  if (n < 0) throw SecretEncodingError("malformed base64");
  return std::string(reinterpret_cast<const char*>(out.data()),
                     static_cast<std::size_t>(n) - pad);
}

Secret Secret::from_plain(std::string plain) {
  Secret s;
  s.value_ = std::move(plain);
  return s;
}

Secret Secret::from_encoded(std::string_view encoded) {
  Secret s;
  try {
    s.value_ = decode_secret(encoded);
  } catch (const SecretEncodingError&) {
    s.value_ = std::string(encoded);
    s.placeholder_ = true;
  }
  return s;
}

std::string Secret::encoded() const {
  return placeholder_ ? value_ : encode_secret(value_);
}

}  // namespace edgebench
