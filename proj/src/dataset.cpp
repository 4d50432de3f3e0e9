#include "gatedgan/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gatedgan/image_io.hpp"

namespace fs = std::filesystem;

namespace gatedgan {

DirectoryListing list_images(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DatasetError("not a directory: " + dir);
  DirectoryListing out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && is_image_path(entry.path().string())) {
      out.files.push_back(entry.path().string());
    } else {
      ++out.skipped;
    }
  }
  if (ec) throw DatasetError("cannot list " + dir + ": " + ec.message());
  if (out.files.empty()) throw DatasetError("no images in " + dir);
  std::sort(out.files.begin(), out.files.end());
  return out;
}

std::vector<std::size_t> DatasetIndex::counts() const {
  std::vector<std::size_t> out;
  for (const auto& files : style_files) out.push_back(files.size());
  return out;
}

DatasetIndex index_dataset(const std::string& content_dir, const std::vector<StyleSource>& styles) {
  if (styles.empty()) throw DatasetError("no style collections given");
  DatasetIndex index;
  if (!content_dir.empty()) {
    DirectoryListing content = list_images(content_dir);
    index.content_files = std::move(content.files);
    index.skipped += content.skipped;
  }
  for (const auto& style : styles) {
    if (std::find(index.style_names.begin(), index.style_names.end(), style.name) !=
        index.style_names.end()) {
      throw DatasetError("duplicate style name '" + style.name + "'");
    }
    DirectoryListing listing = list_images(style.dir);
    index.style_files.push_back(std::move(listing.files));
    index.style_names.push_back(style.name);
    index.skipped += listing.skipped;
  }
  return index;
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&base](const std::string& dir) {
    const fs::path p(dir);
    return (p.is_absolute() ? p : base / p).lexically_normal().string();
  };
  DatasetManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind) || kind[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (kind == "content") {
      std::string dir;
      if (!(fields >> dir)) throw ConfigError(where + ": content needs a directory");
      manifest.content_dir = resolve(dir);
    } else if (kind == "style") {
      std::string name, dir;
      if (!(fields >> name >> dir)) throw ConfigError(where + ": style needs a name and a directory");
      manifest.styles.push_back({name, resolve(dir)});
    } else {
      throw ConfigError(where + ": unknown entry '" + kind + "'");
    }
  }
  return manifest;
}

std::vector<TensorF> load_images(const std::vector<std::string>& files) {
  std::vector<TensorF> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_image(f));
  return out;
}

TrainingData load_training_data(const DatasetIndex& index) {
  TrainingData data;
  data.content = load_images(index.content_files);
  for (const auto& files : index.style_files) data.styles.push_back(load_images(files));
  data.style_names = index.style_names;
  return data;
}

}  // namespace gatedgan
