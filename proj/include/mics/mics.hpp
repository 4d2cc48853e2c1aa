// Copyright 2026 The mics Authors
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

// Umbrella header.
#pragma once

#include "mics/clarification.hpp"
#include "mics/config.hpp"
#include "mics/conversation.hpp"
#include "mics/error.hpp"
#include "mics/evaluation.hpp"
#include "mics/pipeline.hpp"
#include "mics/ranked_list.hpp"
#include "mics/remote.hpp"
#include "mics/reranker.hpp"
#include "mics/retrieval.hpp"
#include "mics/rewriter.hpp"
#include "mics/service.hpp"
#include "mics/synthetic_annotations.hpp"
#include "mics/text.hpp"
#include "mics/usefulness.hpp"
