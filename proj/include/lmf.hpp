#pragma once

#include "lmf/acf.hpp"
#include "lmf/calibrate.hpp"
#include "lmf/classify.hpp"
#include "lmf/dfa.hpp"
#include "lmf/error.hpp"
#include "lmf/fft.hpp"
#include "lmf/fit_report.hpp"
#include "lmf/lmf_model.hpp"
#include "lmf/order_tape.hpp"
#include "lmf/parallel.hpp"
#include "lmf/powerlaw_fit.hpp"
#include "lmf/psd.hpp"
#include "lmf/random.hpp"
#include "lmf/rls.hpp"
