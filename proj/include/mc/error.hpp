// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_ERROR_HPP_
#define MC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mc {

// Root of every error thrown by the library. The CLI maps subclasses of
// InputError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

#define MC_DECLARE_ERROR(Name, Base) \
  class Name : public Base {         \
   public:                           \
    using Base::Base;                \
  }

MC_DECLARE_ERROR(EmptyText, InputError);
MC_DECLARE_ERROR(SequenceTooLong, InputError);
MC_DECLARE_ERROR(PositionOutOfRange, InputError);
MC_DECLARE_ERROR(UnknownNode, InputError);
MC_DECLARE_ERROR(LengthMismatch, InputError);
MC_DECLARE_ERROR(MissingCacheEntry, InputError);
MC_DECLARE_ERROR(AlignmentError, InputError);
MC_DECLARE_ERROR(GraphMismatch, InputError);
MC_DECLARE_ERROR(ParseError, InputError);
MC_DECLARE_ERROR(UnknownLabel, InputError);
MC_DECLARE_ERROR(ConfigInfeasible, InputError);
MC_DECLARE_ERROR(WordTooShort, InputError);
MC_DECLARE_ERROR(UnknownFormat, InputError);
MC_DECLARE_ERROR(HashMismatch, InputError);
MC_DECLARE_ERROR(DivergedLoss, Error);
MC_DECLARE_ERROR(NonFiniteScore, Error);
MC_DECLARE_ERROR(ProviderUnavailable, Error);
MC_DECLARE_ERROR(MalformedResponse, Error);

#undef MC_DECLARE_ERROR

// A pipeline stage threw; carries the stage name.
class StageFailed : public Error {
 public:
  StageFailed(std::string stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace mc

#endif  // MC_ERROR_HPP_
