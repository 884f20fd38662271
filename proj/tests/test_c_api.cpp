#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reconv/reconv.h"

namespace fs = std::filesystem;

namespace {

struct ConfigHandle {
  reconv_config* ptr = nullptr;
  ConfigHandle() { EXPECT_EQ(reconv_config_create(&ptr), RECONV_OK); }
  ~ConfigHandle() { reconv_config_destroy(ptr); }
};

std::string get(const reconv_config* c, const char* key) {
  size_t needed = 0;
  EXPECT_EQ(reconv_config_get(c, key, nullptr, 0, &needed), RECONV_OK);
  std::string buf(needed, '\0');
  EXPECT_EQ(reconv_config_get(c, key, buf.data(), buf.size(), &needed), RECONV_OK);
  buf.resize(needed - 1);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(RECONV_TEST_TMP) / "c_api" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(reconv_version(), "0.1.0");
  EXPECT_STREQ(reconv_status_name(RECONV_OK), "ok");
  EXPECT_STREQ(reconv_status_name(RECONV_ERR_CONFIG), "config");
  EXPECT_STREQ(reconv_status_name(RECONV_ERR_DATA_FORMAT), "data-format");
}

TEST(CApi, KeyTable) {
  const size_t n = reconv_config_key_count();
  ASSERT_GT(n, 30u);
  reconv_key_info info{};
  ASSERT_EQ(reconv_config_key_info(0, &info), RECONV_OK);
  EXPECT_STREQ(info.name, "seed");
  EXPECT_EQ(reconv_config_key_info(n, &info), RECONV_ERR_USAGE);
  bool saw_lr = false;
  for (size_t i = 0; i < n; ++i) {
    ASSERT_EQ(reconv_config_key_info(i, &info), RECONV_OK);
    if (std::strcmp(info.name, "learning_rate") == 0) {
      saw_lr = true;
      EXPECT_EQ(info.type, RECONV_KEY_REAL);
      EXPECT_STREQ(info.default_value, "0.001");
    }
  }
  EXPECT_TRUE(saw_lr);
}

TEST(CApi, ConfigSetGetAndErrors) {
  ConfigHandle c;
  EXPECT_EQ(get(c.ptr, "batch_size"), "128");
  EXPECT_EQ(reconv_config_set(c.ptr, "m", "24"), RECONV_OK);
  EXPECT_EQ(get(c.ptr, "m"), "24");

  EXPECT_EQ(reconv_config_set(c.ptr, "feature_maps", "24"), RECONV_ERR_CONFIG);
  EXPECT_NE(std::string(reconv_last_error()).find("valid keys"), std::string::npos);
  EXPECT_EQ(reconv_config_set(c.ptr, "m", "x"), RECONV_ERR_CONFIG);
  EXPECT_EQ(reconv_config_set(nullptr, "m", "1"), RECONV_ERR_USAGE);

  char small[2];
  size_t needed = 0;
  EXPECT_EQ(reconv_config_get(c.ptr, "dataset", small, sizeof small, &needed), RECONV_ERR_USAGE);
  EXPECT_EQ(needed, std::strlen("synthetic") + 1);

  reconv_config* missing = nullptr;
  EXPECT_EQ(reconv_config_load("/nonexistent/reconv.cfg", &missing), RECONV_ERR_CONFIG);
  EXPECT_EQ(missing, nullptr);
}

TEST(CApi, ParamCount) {
  size_t count = 0;
  ASSERT_EQ(reconv_param_count(71, 3, 0, &count), RECONV_OK);
  EXPECT_EQ(count, 195473u);
  ASSERT_EQ(reconv_param_count(108, 3, 1, &count), RECONV_OK);
  EXPECT_EQ(count, 195058u);
  EXPECT_EQ(reconv_param_count(0, 3, 1, &count), RECONV_ERR_CONFIG);
}

TEST(CApi, DatasetRoundTrip) {
  const fs::path dir = fresh_dir("data");
  reconv_dataset* data = nullptr;
  ASSERT_EQ(reconv_dataset_synthetic(5, 3, &data), RECONV_OK);
  ASSERT_EQ(reconv_dataset_size(data), 5u);
  const std::string img = (dir / "img.bin").string(), lab = (dir / "lab.bin").string();
  ASSERT_EQ(reconv_dataset_write_raw(data, img.c_str(), lab.c_str()), RECONV_OK);

  reconv_dataset* back = nullptr;
  ASSERT_EQ(reconv_dataset_load_raw(img.c_str(), lab.c_str(), 5, 10, &back), RECONV_OK);
  std::vector<double> a(3072), b(3072);
  for (size_t i = 0; i < 5; ++i) {
    size_t la = 0, lb = 0;
    ASSERT_EQ(reconv_dataset_label(data, i, &la), RECONV_OK);
    ASSERT_EQ(reconv_dataset_label(back, i, &lb), RECONV_OK);
    EXPECT_EQ(la, lb);
    ASSERT_EQ(reconv_dataset_image(data, i, a.data(), a.size()), RECONV_OK);
    ASSERT_EQ(reconv_dataset_image(back, i, b.data(), b.size()), RECONV_OK);
    for (size_t k = 0; k < a.size(); ++k) ASSERT_LE(std::abs(a[k] - b[k]), 0.5 / 255 + 1e-12);
  }
  size_t label = 0;
  EXPECT_EQ(reconv_dataset_label(data, 5, &label), RECONV_ERR_USAGE);
  EXPECT_EQ(reconv_dataset_image(data, 0, a.data(), 10), RECONV_ERR_SHAPE);

  reconv_dataset* bad = nullptr;
  EXPECT_EQ(reconv_dataset_load_raw(img.c_str(), lab.c_str(), 6, 10, &bad), RECONV_ERR_DATA_FORMAT);
  EXPECT_NE(std::string(reconv_last_error()).find("expected"), std::string::npos);

  std::ofstream(dir / "short.bin", std::ios::binary) << std::string(3073 + 10, '\0');
  const std::string short_path = (dir / "short.bin").string();
  const char* paths[] = {short_path.c_str()};
  EXPECT_EQ(reconv_dataset_load_cifar10(paths, 1, &bad), RECONV_ERR_DATA_FORMAT);
  EXPECT_NE(std::string(reconv_last_error()).find("3073"), std::string::npos);

  reconv_dataset_destroy(back);
  reconv_dataset_destroy(data);
}

TEST(CApi, UntrainedModelPredictsUniformly) {
  ConfigHandle c;
  reconv_config_set(c.ptr, "m", "4");
  reconv_config_set(c.ptr, "l", "2");
  reconv_config_set(c.ptr, "tied", "true");
  reconv_model* model = nullptr;
  ASSERT_EQ(reconv_model_create(c.ptr, 1, &model), RECONV_OK);
  size_t expected = 0;
  reconv_param_count(4, 2, 1, &expected);
  EXPECT_EQ(reconv_model_param_count(model), expected);

  std::vector<double> image(3072, 0.5);
  std::vector<double> probs(10);
  ASSERT_EQ(reconv_model_predict(model, image.data(), image.size(), probs.data(), probs.size()), RECONV_OK);
  for (double p : probs) EXPECT_NEAR(p, 0.1, 1e-12);
  double loss = 0;
  ASSERT_EQ(reconv_model_loss(model, image.data(), image.size(), 3, &loss), RECONV_OK);
  EXPECT_NEAR(loss, std::log(10.0), 1e-12);
  EXPECT_EQ(reconv_model_loss(model, image.data(), image.size(), 10, &loss), RECONV_ERR_SHAPE);
  EXPECT_EQ(reconv_model_predict(model, image.data(), 3, probs.data(), probs.size()), RECONV_ERR_SHAPE);
  reconv_model_destroy(model);
}

TEST(CApi, ModelTrainsOnTinyData) {
  ConfigHandle c;
  reconv_config_set(c.ptr, "m", "4");
  reconv_config_set(c.ptr, "l", "1");
  reconv_config_set(c.ptr, "batch_size", "4");
  reconv_model* model = nullptr;
  reconv_dataset* data = nullptr;
  ASSERT_EQ(reconv_model_create(c.ptr, 2, &model), RECONV_OK);
  ASSERT_EQ(reconv_dataset_synthetic(8, 1, &data), RECONV_OK);
  std::vector<double> image(3072);
  reconv_dataset_image(data, 0, image.data(), image.size());
  double before = 0, after = 0, err = 0;
  reconv_model_loss(model, image.data(), image.size(), 0, &before);
  ASSERT_EQ(reconv_model_train(model, data, nullptr, 2), RECONV_OK);
  reconv_model_loss(model, image.data(), image.size(), 0, &after);
  EXPECT_NE(before, after);
  ASSERT_EQ(reconv_model_error_rate(model, data, &err), RECONV_OK);
  EXPECT_GE(err, 0.0);
  EXPECT_LE(err, 1.0);
  reconv_dataset_destroy(data);
  reconv_model_destroy(model);
}

TEST(CApi, RunPairsWritesArtifacts) {
  const fs::path dir = fresh_dir("pairs");
  ConfigHandle c;
  reconv_config_set(c.ptr, "l", "3");
  std::vector<std::string> lines;
  auto log = [](void* user, const char* line) { static_cast<std::vector<std::string>*>(user)->push_back(line); };
  ASSERT_EQ(reconv_run("pairs", c.ptr, dir.string().c_str(), log, &lines), RECONV_OK);
  std::ifstream in(dir / "pairs.csv");
  std::stringstream s;
  s << in.rdbuf();
  EXPECT_NE(s.str().find("3,71,108,195473,195058,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));

  EXPECT_EQ(reconv_run("fit", c.ptr, dir.string().c_str(), nullptr, nullptr), RECONV_ERR_USAGE);
}
