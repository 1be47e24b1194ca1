#pragma once

// Annotation file + recordings -> feature table.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "swallow/audio_io.hpp"
#include "swallow/dataset.hpp"
#include "swallow/features.hpp"

namespace swallow {

/// Extracts one FeatureRecord per annotation, in annotation order. Annotations
/// with a `file` column are resolved against the annotation file's directory;
/// otherwise every annotation refers to `recording`.
inline FeatureTable extract_from_annotations(const std::string& annotations_path,
                                             const std::optional<std::string>& recording,
                                             const FrameConfig& frame = {}, const MelConfig& mel = {}) {
  namespace fs = std::filesystem;
  const auto annotations = parse_annotations(annotations_path);
  const fs::path base = fs::path(annotations_path).parent_path();

  std::map<std::string, AudioSignal> cache;
  FeatureTable table;
  table.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    std::string path;
    if (!a.file.empty()) {
      path = (base / a.file).string();
    } else if (recording) {
      path = *recording;
    } else {
      throw Error(Errc::format, "annotation " + std::to_string(i + 1) + " names no recording and none was given");
    }
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, read_wav(path)).first;
    const SegmentAnnotation one[] = {a};
    AudioSegment segment;
    try {
      segment = std::move(slice_segments(it->second, one).front());
    } catch (const Error& e) {
      throw Error(e.code(), "annotation " + std::to_string(i + 1) + " (" + path + "): " + e.what());
    }
    FeatureRecord r;
    r.segment_id = fs::path(path).stem().string() + "_" + std::to_string(i + 1);
    r.label = a.label;
    r.consistency = a.consistency;
    r.subject_id = a.subject_id;
    try {
      r.features = extract_feature_vector(segment, frame, mel);
    } catch (const Error& e) {
      throw Error(e.code(), "segment " + r.segment_id + ": " + e.what());
    }
    table.push_back(std::move(r));
  }
  return table;
}

}  // namespace swallow
