// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "swiftattn/tensor.hpp"

namespace swiftattn::detail {

AllocationStats*& allocation_probe_slot() {
  thread_local AllocationStats* slot = nullptr;
  return slot;
}

}  // namespace swiftattn::detail
