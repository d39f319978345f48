#pragma once

#include "kinest/bench.hpp"
#include "kinest/config.hpp"
#include "kinest/error.hpp"
#include "kinest/infer.hpp"
#include "kinest/io.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/losses.hpp"
#include "kinest/metrics.hpp"
#include "kinest/model.hpp"
#include "kinest/pose.hpp"
#include "kinest/rotations.hpp"
#include "kinest/ssd.hpp"
#include "kinest/synthetic.hpp"
#include "kinest/train.hpp"
#include "kinest/verify.hpp"
#include "kinest/weights.hpp"
