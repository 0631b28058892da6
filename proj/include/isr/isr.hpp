#pragma once

#include "isr/video.hpp"
#include "isr/transform.hpp"
#include "isr/features.hpp"
#include "isr/classifier.hpp"
#include "isr/learn.hpp"
#include "isr/synth.hpp"
#include "isr/experiment.hpp"
#include "isr/io.hpp"
#include "isr/config.hpp"
#include "isr/serialize.hpp"
