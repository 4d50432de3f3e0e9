#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gatedgan/training.hpp"

namespace gatedgan {

struct DirectoryListing {
  std::vector<std::string> files;  // lexicographic
  std::size_t skipped = 0;         // entries that are not supported images
};

/// Lists the image files directly inside `dir`. Throws DatasetError when the
/// directory is missing or holds no images.
DirectoryListing list_images(const std::string& dir);

struct StyleSource {
  std::string name;
  std::string dir;
};

struct DatasetIndex {
  std::vector<std::string> content_files;
  std::vector<std::vector<std::string>> style_files;
  std::vector<std::string> style_names;
  std::size_t skipped = 0;

  std::size_t style_count() const noexcept { return style_files.size(); }
  std::vector<std::size_t> counts() const;
};

/// An empty content_dir is allowed (texture synthesis needs no content).
DatasetIndex index_dataset(const std::string& content_dir, const std::vector<StyleSource>& styles);

struct DatasetManifest {
  std::string content_dir;
  std::vector<StyleSource> styles;
};

/// Parses lines of the form "content <dir>" and "style <name> <dir>"; blank
/// lines and lines starting with '#' are ignored. Relative directories are
/// resolved against the manifest's own directory.
DatasetManifest read_manifest(const std::string& path);

std::vector<TensorF> load_images(const std::vector<std::string>& files);
TrainingData load_training_data(const DatasetIndex& index);

}  // namespace gatedgan
