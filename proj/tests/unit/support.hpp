#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "ceal/measurement.hpp"
#include "ceal/workflow.hpp"

namespace ceal::testing {

inline std::filesystem::path repo_root() { return CEAL_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return repo_root() / "tests" / "data"; }
inline Workflow lv_like() { return load_workflow(repo_root() / "workflows" / "lv_like.json"); }
inline Workflow gp_like() { return load_workflow(repo_root() / "workflows" / "gp_like.json"); }

/// Counts calls and forwards them.
class CountingExecutor final : public Executor {
 public:
  explicit CountingExecutor(Executor& inner) : inner_(inner) {}
  Measurement measure(const Configuration& c) override {
    ++workflow_calls;
    return inner_.measure(c);
  }
  ComponentMeasurement measure_component(std::size_t j, const Configuration& cj) override {
    ++component_calls;
    return inner_.measure_component(j, cj);
  }
  bool reentrant() const override { return inner_.reentrant(); }

  std::atomic<std::size_t> workflow_calls{0};
  std::atomic<std::size_t> component_calls{0};

 private:
  Executor& inner_;
};

/// Fails every configuration whose fingerprint is divisible by `modulus`.
class FlakyExecutor final : public Executor {
 public:
  FlakyExecutor(Executor& inner, std::uint64_t modulus) : inner_(inner), modulus_(modulus) {}
  Measurement measure(const Configuration& c) override {
    if (fingerprint(c) % modulus_ == 0) return Measurement::failed(c, Provenance::Synthetic, "injected failure");
    return inner_.measure(c);
  }
  ComponentMeasurement measure_component(std::size_t j, const Configuration& cj) override {
    return inner_.measure_component(j, cj);
  }
  bool reentrant() const override { return inner_.reentrant(); }

 private:
  Executor& inner_;
  std::uint64_t modulus_;
};

}  // namespace ceal::testing
