#ifndef ABSTAIN_VERSION_HPP_
#define ABSTAIN_VERSION_HPP_

namespace abstain {

inline constexpr const char *kVersion = "1.0.0";

}  // namespace abstain

#endif  // ABSTAIN_VERSION_HPP_
