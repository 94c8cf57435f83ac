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

#include "egopose/frame_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "egopose/io.hpp"

namespace egopose {

namespace fs = std::filesystem;

fs::path save_i420_fixture(const FrameYUV420& frame, const fs::path& dir, const std::string& stem) {
  frame.validate();
  fs::create_directories(dir);
  const fs::path blob = dir / (stem + ".i420");
  {
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + blob.string());
    out.write(reinterpret_cast<const char*>(frame.y.data()), static_cast<std::streamsize>(frame.y.size()));
    out.write(reinterpret_cast<const char*>(frame.u.data()), static_cast<std::streamsize>(frame.u.size()));
    out.write(reinterpret_cast<const char*>(frame.v.data()), static_cast<std::streamsize>(frame.v.size()));
  }
  const fs::path sidecar = dir / (stem + ".json");
  std::ofstream meta(sidecar);
  if (!meta) throw ConfigError("cannot write " + sidecar.string());
  meta << nlohmann::json{{"width", frame.width},
                         {"height", frame.height},
                         {"frame_id", frame.frame_id},
                         {"timestamp", frame.capture_timestamp_us},
                         {"file", blob.filename().string()}}
              .dump()
       << '\n';
  return sidecar;
}

FrameYUV420 load_i420_fixture(const fs::path& sidecar) {
  const nlohmann::json j = read_json_file(sidecar);
  FrameYUV420 frame;
  try {
    frame = FrameYUV420(j.at("width").get<int>(), j.at("height").get<int>());
    frame.frame_id = j.at("frame_id").get<std::uint32_t>();
    frame.capture_timestamp_us = j.value("timestamp", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("frame sidecar " + sidecar.string() + ": " + e.what());
  }
  if (frame.width <= 0 || frame.height <= 0 || frame.width % 2 || frame.height % 2)
    throw ConfigError("frame sidecar " + sidecar.string() + ": dimensions must be positive and even");

  const fs::path blob =
      sidecar.parent_path() / j.value("file", sidecar.stem().string() + ".i420");
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + blob.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t need = frame.y.size() + frame.u.size() + frame.v.size();
  if (bytes.size() != need)
    throw StructuralError("frame blob " + blob.string() + " has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(need));
  auto it = bytes.begin();
  std::copy_n(it, frame.y.size(), frame.y.begin());
  it += static_cast<std::ptrdiff_t>(frame.y.size());
  std::copy_n(it, frame.u.size(), frame.u.begin());
  it += static_cast<std::ptrdiff_t>(frame.u.size());
  std::copy_n(it, frame.v.size(), frame.v.begin());
  return frame;
}

std::vector<fs::path> list_fixture_sidecars(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        fs::exists(fs::path(entry.path()).replace_extension(".i420")))
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_ppm(const FrameRGB& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

}  // namespace egopose
