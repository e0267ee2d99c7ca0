#ifndef ABSTAIN_ABSTAIN_HPP_
#define ABSTAIN_ABSTAIN_HPP_

#include "abstain/aggregate.hpp"
#include "abstain/calibrate.hpp"
#include "abstain/csv.hpp"
#include "abstain/diagnose.hpp"
#include "abstain/errors.hpp"
#include "abstain/frontier.hpp"
#include "abstain/harness.hpp"
#include "abstain/records.hpp"
#include "abstain/rng.hpp"
#include "abstain/synth.hpp"
#include "abstain/version.hpp"

#endif  // ABSTAIN_ABSTAIN_HPP_
