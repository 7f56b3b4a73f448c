#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fullend/util/kv_config.hpp"

namespace fullend::models {

/// Layer widths for every network. The paper-size widths are divided by
/// `scale` (LSTM and token sizes included); attention heads stay fixed.
struct ModelProfile {
  std::string name = "tiny";
  std::size_t scale = 8;
  std::size_t bins = 257;

  std::vector<std::size_t> crn_encoder_channels;  // six stride-2 stages
  std::size_t crn_lstm_hidden = 0;
  std::size_t crn_lstm_layers = 2;

  std::vector<std::size_t> token_conv_channels;
  std::size_t token_lstm_hidden = 0;
  std::size_t token_count = 16;
  std::size_t token_dim = 0;  // = embedding width
  std::size_t token_heads = 8;
  double token_init_std = 0.1;

  std::size_t le_channels = 0;
  std::size_t le_layers = 6;
  std::size_t le_kernel = 5;

  std::vector<std::size_t> disc_channels;
  std::size_t int_outputs = 1;  // ESTOI
  std::size_t qua_outputs = 2;  // segSNR, -LSD

  static ModelProfile tiny();
  static ModelProfile paper();
  /// Paper widths divided by `scale` (rounded up, at least 1).
  static ModelProfile scaled(std::size_t scale, std::string name);
  static ModelProfile by_name(const std::string& name);
  /// [model] profile = tiny|paper, optional scale, int_outputs, qua_outputs.
  static ModelProfile from_config(const util::KvConfig& cfg);

  /// Decoder output channels, mirroring the encoder; the last one is 1 (a mask plane).
  std::vector<std::size_t> crn_decoder_outputs() const;
  /// Decoder input channels (previous output + skip).
  std::vector<std::size_t> crn_decoder_inputs() const;
  /// Frequency sizes through the encoder: bins, then one per stage.
  std::vector<std::size_t> encoder_bin_ladder() const;
  std::size_t embedding_dim() const { return token_dim; }
  void validate() const;
  std::string describe() const;
};

}  // namespace fullend::models
