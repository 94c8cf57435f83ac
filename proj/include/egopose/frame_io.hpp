// Copyright 2026 The EgoPose Authors.
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

// On-disk frames: planar I420 blobs with a JSON sidecar, and PPM dumps.

#pragma once

#include <filesystem>
#include <vector>

#include "egopose/preprocess.hpp"

namespace egopose {

/// Writes `<dir>/<stem>.i420` and `<dir>/<stem>.json` with
/// {"width","height","frame_id","timestamp","file"}. Returns the sidecar path.
std::filesystem::path save_i420_fixture(const FrameYUV420& frame, const std::filesystem::path& dir,
                                        const std::string& stem);

/// Loads a frame given its sidecar. The blob is the sidecar's "file" entry
/// (relative to the sidecar) or `<stem>.i420`.
FrameYUV420 load_i420_fixture(const std::filesystem::path& sidecar);

/// Sidecar files (*.json with a sibling *.i420 blob) in `dir`, sorted by name.
std::vector<std::filesystem::path> list_fixture_sidecars(const std::filesystem::path& dir);

/// Binary PPM (P6).
void write_ppm(const FrameRGB& image, const std::filesystem::path& path);

}  // namespace egopose
