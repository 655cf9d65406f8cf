/*
 * Copyright 2026 The Tempsal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TEMPSAL_TEMPSAL_HPP_
#define TEMPSAL_TEMPSAL_HPP_

#include "tempsal/attribution.hpp"
#include "tempsal/bridge.hpp"
#include "tempsal/core.hpp"
#include "tempsal/data.hpp"
#include "tempsal/evaluation.hpp"
#include "tempsal/linear.hpp"
#include "tempsal/mlp.hpp"
#include "tempsal/model_io.hpp"
#include "tempsal/parallel.hpp"
#include "tempsal/predictor.hpp"
#include "tempsal/report.hpp"

#endif  // TEMPSAL_TEMPSAL_HPP_
