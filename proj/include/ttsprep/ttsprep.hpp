#pragma once

// Umbrella header: everything needed to prepare a multi-speaker emotional
// speech corpus and its training schedule.

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/curriculum.hpp"
#include "ttsprep/errors.hpp"
#include "ttsprep/hash.hpp"
#include "ttsprep/manifest.hpp"
#include "ttsprep/mel.hpp"
#include "ttsprep/mel_io.hpp"
#include "ttsprep/philox.hpp"
#include "ttsprep/pipeline.hpp"
#include "ttsprep/resample.hpp"
#include "ttsprep/sampler.hpp"
#include "ttsprep/stats.hpp"
#include "ttsprep/stft.hpp"
#include "ttsprep/text_frontend.hpp"
#include "ttsprep/vad.hpp"
#include "ttsprep/version.hpp"
#include "ttsprep/wav.hpp"
