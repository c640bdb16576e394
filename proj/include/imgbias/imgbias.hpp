#pragma once

// Umbrella header.

#include "imgbias/audit.hpp"
#include "imgbias/config.hpp"
#include "imgbias/debias.hpp"
#include "imgbias/error.hpp"
#include "imgbias/eval.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/jpeg_codec.hpp"
#include "imgbias/jpeg_parse.hpp"
#include "imgbias/metrics.hpp"
#include "imgbias/parallel.hpp"
#include "imgbias/png.hpp"
#include "imgbias/probe.hpp"
#include "imgbias/provenance.hpp"
#include "imgbias/quant_tables.hpp"
#include "imgbias/raster.hpp"
#include "imgbias/report.hpp"
#include "imgbias/rng.hpp"
#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"
