// Copyright 2026 The xbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>

#include "xbc/train.hpp"

namespace xbc::eval {

// The CRF-free comparator: same encoder and training loop, per-token
// softmax over emissions instead of the CRF, argmax decoding.
model::TrainResult softmax_baseline(std::span<const annotate::TaggedSequence> train,
                                    std::span<const annotate::TaggedSequence> dev,
                                    model::TrainConfig config, const annotate::LabelSchema& schema,
                                    const embed::EmbedderConfig& embedder,
                                    const preprocess::ResourceSet* resources = nullptr);

}  // namespace xbc::eval
