#pragma once

#include "focal/config.hpp"
#include "focal/nn.hpp"

namespace fixture {

// Small enough for unit tests to train a few epochs in well under a second.
inline focal::RunConfig tiny_config() {
  focal::RunConfig c;
  c.data.synth.n_sequences = 16;
  c.data.synth.window_length = 100;
  c.data.batch_sequences = 4;
  c.encoder.interval_hidden = 16;
  c.encoder.embed_dim = 16;
  c.encoder.proj_hidden = 16;
  c.encoder.proj_dim = 8;
  c.schedule.epochs = 5;
  c.schedule.max_lr = 1e-3;
  c.schedule.finetune_epochs = 20;
  return c;
}

inline bool same_parameters(const focal::FocalModel& a, const focal::FocalModel& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    if (pa[k]->name != pb[k]->name || pa[k]->value.rows() != pb[k]->value.rows() ||
        pa[k]->value.cols() != pb[k]->value.cols() || pa[k]->value != pb[k]->value) {
      return false;
    }
  }
  return true;
}

}  // namespace fixture
